#include "lobqr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>

#include "lobqr/errors.hpp"

namespace lobqr {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::int64_t record_key(const EventRecord& r, int level) {
    return level > 0 ? 2 * (r.ref_price + level) - 1 : 2 * (r.ref_price + level) + 1;
}

std::optional<int> best_level(const EventRecord& r, int side) {
    for (int i = 1; i <= kDefaultDepth; ++i)
        if (r.queue(side * i) > 0) return side * i;
    return std::nullopt;
}

// a one-sided snapshot (just before a replenishing order) keeps the last mid
double quoted_mid(const EventRecord& r, double previous) {
    const auto bid = best_level(r, -1);
    const auto ask = best_level(r, 1);
    if (!bid || !ask) return previous;
    return static_cast<double>(record_key(r, *bid) + record_key(r, *ask)) / 4.0;
}

std::ofstream open_csv(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path);
    out << std::setprecision(17);
    return out;
}

ordered_json matrix_json(const Eigen::MatrixXd& m) {
    ordered_json rows = ordered_json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        ordered_json row = ordered_json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

TransitionMatrix from_counts(const Eigen::MatrixXd& counts, std::vector<std::string> names) {
    TransitionMatrix tm;
    tm.labels = std::move(names);
    const auto n = counts.rows();
    tm.p = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double total = counts.row(i).sum();
        tm.row_counts.push_back(static_cast<std::uint64_t>(total));
        if (total <= 0.0) {
            tm.empty_rows.push_back(tm.labels[static_cast<std::size_t>(i)]);
            continue;
        }
        tm.p.row(i) = counts.row(i) / total;
    }
    return tm;
}

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
};

MeanSe mean_se(const std::vector<double>& v) {
    MeanSe r;
    if (v.empty()) return r;
    const double n = static_cast<double>(v.size());
    r.mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
    if (v.size() > 1) {
        double ss = 0.0;
        for (double x : v) ss += (x - r.mean) * (x - r.mean);
        r.se = std::sqrt(ss / (n - 1.0) / n);
    }
    return r;
}

std::vector<double> average_ranks(std::span<const double> x) {
    std::vector<std::size_t> idx(x.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> ranks(x.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j + 1 < idx.size() && x[idx[j + 1]] == x[idx[i]]) ++j;
        const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

// ---------------------------------------------------------------- transitions

double TransitionMatrix::max_abs_diff(const TransitionMatrix& other) const {
    if (p.rows() != other.p.rows() || p.cols() != other.p.cols()) throw ShapeMismatch("transition matrices differ in shape");
    return (p - other.p).cwiseAbs().maxCoeff();
}

double TransitionMatrix::max_row_spread() const {
    double spread = 0.0;
    for (Eigen::Index j = 0; j < p.cols(); ++j) {
        double lo = 1.0, hi = 0.0;
        bool any = false;
        for (Eigen::Index i = 0; i < p.rows(); ++i) {
            if (row_counts[static_cast<std::size_t>(i)] == 0) continue;
            lo = std::min(lo, p(i, j));
            hi = std::max(hi, p(i, j));
            any = true;
        }
        if (any) spread = std::max(spread, hi - lo);
    }
    return spread;
}

ordered_json TransitionMatrix::to_json() const {
    ordered_json j;
    j["labels"] = labels;
    j["p"] = matrix_json(p);
    j["row_counts"] = row_counts;
    j["empty_rows"] = empty_rows;
    return j;
}

void TransitionMatrix::write_csv(const std::string& path) const {
    auto out = open_csv(path);
    out << "from";
    for (const auto& l : labels) out << ',' << l;
    out << ",count\n";
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
        out << labels[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < p.cols(); ++j) out << ',' << p(i, j);
        out << ',' << row_counts[static_cast<std::size_t>(i)] << '\n';
    }
}

TransitionMatrix transition_matrix(std::span<const int> sequence, std::vector<std::string> names) {
    if (sequence.size() < 2) throw ValueError("transition matrix needs at least 2 events");
    const auto n = static_cast<Eigen::Index>(names.size());
    Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t i = 0; i < sequence.size(); ++i)
        if (sequence[i] < 0 || sequence[i] >= n) throw ValueError("label " + std::to_string(sequence[i]) + " out of range");
    for (std::size_t i = 1; i < sequence.size(); ++i) counts(sequence[i - 1], sequence[i]) += 1.0;
    return from_counts(counts, std::move(names));
}

TransitionMatrix transition_matrix(const std::vector<EventRecord>& events, TransitionLabeling labeling) {
    if (events.size() < 2) throw ValueError("transition matrix needs at least 2 events");
    if (labeling == TransitionLabeling::SingleQueue) {
        Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(kEventTypes, kEventTypes);
        std::map<std::int64_t, int> last;
        for (const auto& e : events) {
            const auto key = record_key(e, e.level);
            const int type = index_of(e.type);
            const auto it = last.find(key);
            if (it != last.end()) {
                counts(it->second, type) += 1.0;
                it->second = type;
            } else {
                last.emplace(key, type);
            }
        }
        return from_counts(counts, {"L", "C", "M"});
    }
    std::vector<int> seq;
    for (const auto& e : events) {
        const auto bid = best_level(e, -1);
        const auto ask = best_level(e, 1);
        if ((bid && e.level == *bid) || (ask && e.level == *ask))
            seq.push_back((e.level > 0 ? kEventTypes : 0) + index_of(e.type));
    }
    if (seq.size() < 2) throw ValueError("fewer than 2 events at the best quotes");
    return transition_matrix(seq, {"bid:L", "bid:C", "bid:M", "ask:L", "ask:C", "ask:M"});
}

// ----------------------------------------------------------- intraday profile

double IntradayProfile::total_rate() const {
    double count = 0.0, seconds = 0.0;
    for (int h = 0; h < kHours; ++h) {
        count += static_cast<double>(counts[static_cast<std::size_t>(h)]);
        seconds += exposure[static_cast<std::size_t>(h)];
    }
    return seconds > 0.0 ? count / seconds : 0.0;
}

ordered_json IntradayProfile::to_json() const {
    ordered_json j;
    j["rate"] = rate;
    j["exposure"] = exposure;
    j["counts"] = counts;
    j["total_rate"] = total_rate();
    return j;
}

IntradayProfile intraday_profile(const std::vector<EventRecord>& events, std::optional<EventType> type, double start,
                                 double end) {
    if (!(end - start >= 3600.0)) throw ValueError("intraday profile needs a window of at least one hour");
    if (start < 0.0 || end > kSessionLength) throw OutOfSession("profile window outside the session");
    IntradayProfile p;
    for (int h = 0; h < kHours; ++h) {
        const double lo = std::max(start, 3600.0 * h);
        const double hi = std::min(end, 3600.0 * (h + 1));
        p.exposure[static_cast<std::size_t>(h)] = std::max(0.0, hi - lo);
    }
    for (const auto& e : events) {
        if (e.t < start || e.t >= end) continue;
        if (type && e.type != *type) continue;
        ++p.counts[static_cast<std::size_t>(hour_index(e.t))];
    }
    for (std::size_t h = 0; h < kHours; ++h)
        p.rate[h] = p.exposure[h] > 0.0 ? static_cast<double>(p.counts[h]) / p.exposure[h] : 0.0;
    return p;
}

// ------------------------------------------------------------------ gamma fit

ordered_json GammaFit::to_json() const {
    ordered_json j;
    j["shape"] = shape;
    j["scale"] = scale;
    j["rate"] = 1.0 / scale;
    j["log_likelihood"] = log_likelihood;
    j["n"] = n;
    j["iterations"] = iterations;
    j["converged"] = converged;
    return j;
}

GammaFit gamma_fit(std::span<const double> samples) {
    if (samples.size() < 100) throw ValueError("gamma fit needs at least 100 samples");
    double sum = 0.0, sum_log = 0.0;
    for (double x : samples) {
        if (!(x > 0.0) || !std::isfinite(x)) throw NonPositiveSample("gamma fit sample " + std::to_string(x));
        sum += x;
        sum_log += std::log(x);
    }
    const double n = static_cast<double>(samples.size());
    const double mean = sum / n;
    double var = 0.0;
    for (double x : samples) var += (x - mean) * (x - mean);
    var /= n;
    const double s = std::log(mean) - sum_log / n;

    GammaFit fit;
    fit.n = samples.size();
    const double mom = var > 0.0 ? mean * mean / var : 1.0;
    double a = mom;
    for (int it = 1; it <= 100 && s > 0.0; ++it) {
        const double f = std::log(a) - boost::math::digamma(a) - s;
        const double df = 1.0 / a - boost::math::trigamma(a);
        double next = a - f / df;
        if (!(next > 0.0) || !std::isfinite(next)) next = a / 2.0;
        const double step = std::abs(next - a);
        a = next;
        fit.iterations = it;
        if (step < 1e-10 * std::max(1.0, a)) {
            fit.converged = true;
            break;
        }
    }
    if (!fit.converged) a = mom;
    fit.shape = a;
    fit.scale = mean / a;
    fit.log_likelihood = (a - 1.0) * sum_log - sum / fit.scale - n * (std::lgamma(a) + a * std::log(fit.scale));
    return fit;
}

// -------------------------------------------------------------- power law fit

ordered_json PowerLawFit::to_json() const {
    ordered_json j;
    j["exponent"] = exponent;
    j["prefactor"] = prefactor;
    j["r2"] = r2;
    j["n"] = n;
    return j;
}

PowerLawFit sqrt_law_fit(std::span<const double> q, std::span<const double> impact) {
    if (q.size() != impact.size()) throw ShapeMismatch("power-law fit needs paired values");
    if (q.size() < 3) throw ValueError("power-law fit needs at least 3 points");
    std::vector<double> x, y;
    for (std::size_t i = 0; i < q.size(); ++i) {
        if (!(q[i] > 0.0) || !(impact[i] > 0.0))
            throw NonPositiveValue("power-law fit point (" + std::to_string(q[i]) + ", " + std::to_string(impact[i]) + ")");
        x.push_back(std::log(q[i]));
        y.push_back(std::log(impact[i]));
    }
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (!(sxx > 0.0)) throw ValueError("power-law fit needs at least two distinct quantities");
    PowerLawFit f;
    f.n = x.size();
    f.exponent = sxy / sxx;
    const double intercept = my - f.exponent * mx;
    f.prefactor = std::exp(intercept);
    double ss_res = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double e = y[i] - intercept - f.exponent * x[i];
        ss_res += e * e;
    }
    f.r2 = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
    return f;
}

// ------------------------------------------------------------------ mid paths

double MidPath::at(double time) const {
    const auto it = std::upper_bound(t.begin(), t.end(), time);
    if (it == t.begin()) return initial;
    return mid[static_cast<std::size_t>(it - t.begin()) - 1];
}

MidPath mid_path(const SimResult& r, double start, double end) {
    if (r.mid.size() != r.events.size()) throw ValueError("simulation result carries no recorded events");
    MidPath p;
    p.start = start;
    p.end = end;
    p.initial = r.initial_mid;
    p.mid = r.mid;
    p.t.reserve(r.events.size());
    for (const auto& e : r.events) p.t.push_back(e.t);
    return p;
}

MidPath mid_path(const std::vector<EventRecord>& records, double start, double end) {
    MidPath p;
    p.start = start;
    p.end = end;
    if (records.empty()) return p;
    p.initial = quoted_mid(records.front(), kNaN);
    for (std::size_t i = 0; i + 1 < records.size(); ++i) {
        p.t.push_back(records[i].t);
        p.mid.push_back(quoted_mid(records[i + 1], p.mid.empty() ? p.initial : p.mid.back()));
    }
    return p;
}

std::vector<double> returns_1min(const MidPath& path) {
    const auto minutes = static_cast<std::size_t>(std::floor((path.end - path.start) / 60.0 + 1e-9));
    if (minutes < 2) throw ValueError("one-minute returns need a path of at least two minutes");
    std::vector<double> out;
    double prev = path.at(path.start + 60.0);
    for (std::size_t m = 2; m <= minutes; ++m) {
        const double cur = path.at(path.start + 60.0 * static_cast<double>(m));
        out.push_back(cur - prev);
        prev = cur;
    }
    return out;
}

// ------------------------------------------------------------ window counters

ordered_json WindowStats::to_json() const {
    ordered_json j;
    j["window"] = window;
    j["starts"] = starts;
    for (int k = 0; k < kEventTypes; ++k) {
        std::vector<std::uint64_t> c;
        std::vector<std::int64_t> v;
        for (std::size_t w = 0; w < counts.size(); ++w) {
            c.push_back(counts[w][static_cast<std::size_t>(k)]);
            v.push_back(volumes[w][static_cast<std::size_t>(k)]);
        }
        const std::string name(1, to_char(static_cast<EventType>(k)));
        j["counts"][name] = c;
        j["volumes"][name] = v;
    }
    return j;
}

void WindowStats::write_csv(const std::string& path) const {
    auto out = open_csv(path);
    out << "start,count_L,count_C,count_M,volume_L,volume_C,volume_M\n";
    for (std::size_t w = 0; w < starts.size(); ++w)
        out << starts[w] << ',' << counts[w][0] << ',' << counts[w][1] << ',' << counts[w][2] << ',' << volumes[w][0] << ','
            << volumes[w][1] << ',' << volumes[w][2] << '\n';
}

WindowStats window_event_stats(const std::vector<EventRecord>& events, double start, double end, double window) {
    if (!(window > 0.0)) throw ValueError("window length must be positive");
    WindowStats s;
    s.window = window;
    const auto n = end > start ? static_cast<std::size_t>(std::ceil((end - start) / window - 1e-9)) : 0;
    s.counts.assign(n, {});
    s.volumes.assign(n, {});
    for (std::size_t w = 0; w < n; ++w) s.starts.push_back(start + window * static_cast<double>(w));
    for (const auto& e : events) {
        if (e.t < start || e.t >= end) continue;
        const auto w = std::min(n - 1, static_cast<std::size_t>((e.t - start) / window));
        ++s.counts[w][static_cast<std::size_t>(index_of(e.type))];
        s.volumes[w][static_cast<std::size_t>(index_of(e.type))] += e.size;
    }
    return s;
}

// ---------------------------------------------------------------- correlation

ordered_json CorrelationMatrix::to_json() const {
    ordered_json j;
    j["r"] = matrix_json(r);
    ordered_json d = ordered_json::array();
    for (Eigen::Index i = 0; i < defined.rows(); ++i) {
        ordered_json row = ordered_json::array();
        for (Eigen::Index k = 0; k < defined.cols(); ++k) row.push_back(static_cast<bool>(defined(i, k)));
        d.push_back(std::move(row));
    }
    j["defined"] = std::move(d);
    return j;
}

double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw ShapeMismatch("pearson needs equal-length inputs");
    if (x.size() < 2) throw ValueError("pearson needs at least 2 observations");
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (!(sxx > 0.0) || !(syy > 0.0)) return kNaN;
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double spearman(std::span<const double> x, std::span<const double> y) {
    const auto rx = average_ranks(x);
    const auto ry = average_ranks(y);
    const double r = pearson(rx, ry);
    return std::isnan(r) ? 0.0 : r;
}

CorrelationMatrix pearson_matrix(const Eigen::MatrixXd& columns) {
    if (columns.rows() < 2) throw ValueError("correlation needs at least 2 observations");
    const auto k = columns.cols();
    CorrelationMatrix c;
    c.r = Eigen::MatrixXd::Constant(k, k, kNaN);
    c.defined = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(k, k, false);
    std::vector<std::vector<double>> cols(static_cast<std::size_t>(k));
    for (Eigen::Index j = 0; j < k; ++j) {
        cols[static_cast<std::size_t>(j)].resize(static_cast<std::size_t>(columns.rows()));
        Eigen::VectorXd::Map(cols[static_cast<std::size_t>(j)].data(), columns.rows()) = columns.col(j);
    }
    for (Eigen::Index i = 0; i < k; ++i)
        for (Eigen::Index j = 0; j < k; ++j) {
            const double v = pearson(cols[static_cast<std::size_t>(i)], cols[static_cast<std::size_t>(j)]);
            if (std::isnan(v)) continue;
            c.r(i, j) = v;
            c.defined(i, j) = true;
        }
    return c;
}

CorrelationMatrix queue_corr_matrix(const std::vector<EventRecord>& records) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(records.size()), kLevels);
    for (std::size_t i = 0; i < records.size(); ++i)
        for (int j = 0; j < kLevels; ++j)
            m(static_cast<Eigen::Index>(i), j) = static_cast<double>(records[i].queues[static_cast<std::size_t>(j)]);
    return pearson_matrix(m);
}

// --------------------------------------------------------------------- quantiles

double quantile(std::vector<double> data, double p) {
    if (data.empty()) throw ValueError("quantile of an empty sample");
    if (!(p >= 0.0 && p <= 1.0)) throw ValueError("quantile level outside [0, 1]");
    std::sort(data.begin(), data.end());
    const double h = p * static_cast<double>(data.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, data.size() - 1);
    return data[lo] + (h - static_cast<double>(lo)) * (data[hi] - data[lo]);
}

ordered_json QqData::to_json() const {
    ordered_json j;
    j["percentiles"] = percentiles;
    j["a"] = a;
    j["b"] = b;
    return j;
}

QqData qq_data(const std::vector<double>& a, const std::vector<double>& b) {
    QqData q;
    auto sa = a, sb = b;
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    for (int pct = 1; pct <= 99; ++pct) {
        q.percentiles.push_back(pct);
        q.a.push_back(quantile(sa, pct / 100.0));
        q.b.push_back(quantile(sb, pct / 100.0));
    }
    return q;
}

// ----------------------------------------------------------------- fill ratio

void ShadowOrder::on_book(const EventRecord& snapshot) {
    if (done) return;
    bool visible = false;
    for (int l = 1; l <= kDefaultDepth && !visible; ++l)
        visible = record_key(snapshot, l) == price_key || record_key(snapshot, -l) == price_key;
    // the opposite side quoting at or through the order's price means it traded
    const auto opp = best_level(snapshot, -side);
    if (opp) {
        const auto k = record_key(snapshot, *opp);
        if ((side < 0 && k <= price_key) || (side > 0 && k >= price_key)) {
            filled = static_cast<double>(quantity);
            done = true;
            return;
        }
    }
    if (!visible) done = true;
}

void ShadowOrder::on_event(const EventRecord& e) {
    if (done) return;
    const bool same_side = (e.level < 0) == (side < 0);
    if (!same_side) return;
    const auto key = record_key(e, e.level);
    const auto size = static_cast<double>(e.size);
    if (e.type == EventType::Market) {
        if (key == price_key) {
            const double from_ahead = std::min(queue_ahead, size);
            queue_ahead -= from_ahead;
            filled += size - from_ahead;
        } else if ((side < 0 && key < price_key) || (side > 0 && key > price_key)) {
            filled += size;  // the trade went through the order's price
        }
    } else if (e.type == EventType::Cancel && key == price_key) {
        const auto q = static_cast<double>(e.queue(e.level));
        if (q > 0.0) queue_ahead -= std::min(size, q) * queue_ahead / q;
    }
    if (filled >= static_cast<double>(quantity)) {
        filled = static_cast<double>(quantity);
        done = true;
    }
}

std::optional<double> shadow_fill(const std::vector<EventRecord>& records, double t, int side, int level_behind,
                                  std::int64_t quantity, double lifetime) {
    if (quantity < 1) throw ValueError("shadow order quantity must be >= 1");
    const auto it = std::upper_bound(records.begin(), records.end(), t, [](double x, const EventRecord& r) { return x < r.t; });
    if (it == records.end()) return std::nullopt;
    const auto best = best_level(*it, side);
    if (!best) return std::nullopt;
    const int level = *best + side * level_behind;
    if (std::abs(level) > kDefaultDepth) return std::nullopt;
    ShadowOrder o;
    o.side = side;
    o.price_key = record_key(*it, level);
    o.quantity = quantity;
    o.queue_ahead = static_cast<double>(it->queue(level));
    for (auto r = it; r != records.end() && r->t <= t + lifetime; ++r) {
        o.on_book(*r);
        if (o.done) break;
        o.on_event(*r);
        if (o.done) break;
    }
    return o.ratio();
}

namespace {

template <typename T, typename Get>
FillGrid::Marginal marginal(const FillGrid& g, const std::vector<T>& values, Get get) {
    FillGrid::Marginal m;
    for (const auto& v : values) {
        std::vector<double> r;
        for (const auto& s : g.samples)
            if (get(s) == v) r.push_back(s.ratio);
        const auto ms = mean_se(r);
        m.mean.push_back(ms.mean);
        m.se.push_back(ms.se);
    }
    return m;
}

}  // namespace

FillGrid::Marginal FillGrid::by_level() const {
    return marginal(*this, axes.levels, [](const FillSample& s) { return s.level; });
}
FillGrid::Marginal FillGrid::by_lifetime() const {
    return marginal(*this, axes.lifetimes, [](const FillSample& s) { return s.lifetime; });
}
FillGrid::Marginal FillGrid::by_quantity() const {
    return marginal(*this, axes.quantities, [](const FillSample& s) { return s.quantity; });
}

ordered_json FillGrid::to_json() const {
    ordered_json j;
    j["axes"] = {{"quantity", axes.quantities}, {"lifetime", axes.lifetimes}, {"level", axes.levels}};
    j["orders"] = samples.size();
    j["skipped"] = skipped;
    const auto put = [](const Marginal& m) { return ordered_json{{"mean", m.mean}, {"se", m.se}}; };
    j["by_level"] = put(by_level());
    j["by_lifetime"] = put(by_lifetime());
    j["by_quantity"] = put(by_quantity());
    ordered_json cells = ordered_json::array();
    for (auto q : axes.quantities)
        for (auto tau : axes.lifetimes)
            for (auto l : axes.levels) {
                std::vector<double> r;
                for (const auto& s : samples)
                    if (s.quantity == q && s.lifetime == tau && s.level == l) r.push_back(s.ratio);
                const auto ms = mean_se(r);
                cells.push_back({{"quantity", q}, {"lifetime", tau}, {"level", l}, {"n", r.size()}, {"mean", ms.mean}, {"se", ms.se}});
            }
    j["cells"] = std::move(cells);
    return j;
}

void FillGrid::write_csv(const std::string& path) const {
    auto out = open_csv(path);
    out << "quantity,lifetime,level,fill_ratio\n";
    for (const auto& s : samples) out << s.quantity << ',' << s.lifetime << ',' << s.level << ',' << s.ratio << '\n';
}

FillGrid fill_ratio_on_paths(const std::vector<std::vector<EventRecord>>& paths, double start, double end,
                             const FillRatioOptions& opts, std::uint64_t seed, unsigned threads) {
    const auto& ax = opts.axes;
    if (opts.orders_per_cell < 1) throw ConfigError("orders per cell must be >= 1");
    if (paths.empty()) throw ConfigError("fill-ratio experiment needs at least one path");
    if (ax.quantities.empty() || ax.lifetimes.empty() || ax.levels.empty()) throw ConfigError("fill grid axes must be nonempty");
    for (auto q : ax.quantities)
        if (q < 1) throw ConfigError("fill grid quantities must be >= 1");
    for (auto l : ax.levels)
        if (l < 0 || l >= kDefaultDepth) throw ConfigError("fill grid levels must lie in 0..4");
    const double longest = *std::max_element(ax.lifetimes.begin(), ax.lifetimes.end());
    if (!(end - start > longest)) throw ConfigError("paths are shorter than the longest order lifetime");

    struct Anchor {
        std::size_t path;
        double t;
        int side;
    };
    std::vector<Anchor> anchors;
    Rng rng(derive_seed(seed, 0xF111));
    for (std::size_t j = 0; j < opts.orders_per_cell; ++j)
        anchors.push_back({j % paths.size(), start + rng.uniform() * (end - longest - start), j % 2 == 0 ? -1 : 1});

    struct Cell {
        std::int64_t q;
        double tau;
        int level;
    };
    std::vector<Cell> cells;
    for (auto q : ax.quantities)
        for (auto tau : ax.lifetimes)
            for (auto l : ax.levels) cells.push_back({q, tau, l});

    std::vector<std::vector<FillSample>> per_cell(cells.size());
    std::vector<std::size_t> skipped(cells.size(), 0);
    parallel_for(cells.size(), threads, [&](std::size_t c) {
        const auto& cell = cells[c];
        for (const auto& a : anchors) {
            const auto r = shadow_fill(paths[a.path], a.t, a.side, cell.level, cell.q, cell.tau);
            if (!r) {
                ++skipped[c];
                continue;
            }
            per_cell[c].push_back({cell.q, cell.tau, cell.level, *r});
        }
    });
    FillGrid g;
    g.axes = ax;
    for (std::size_t c = 0; c < cells.size(); ++c) {
        g.samples.insert(g.samples.end(), per_cell[c].begin(), per_cell[c].end());
        g.skipped += skipped[c];
    }
    return g;
}

FillGrid fill_ratio_experiment(const IntensityModel& model, const SimConfig& cfg, const FillRatioOptions& opts) {
    SimConfig run_cfg = cfg;
    run_cfg.record_events = true;
    auto results = run(model, run_cfg);
    std::vector<std::vector<EventRecord>> paths;
    for (auto& r : results) paths.push_back(std::move(r.events));
    return fill_ratio_on_paths(paths, cfg.start_time, cfg.start_time + cfg.horizon, opts, cfg.seed, cfg.threads);
}

ordered_json FillCorrelations::to_json() const { return {{"level", level}, {"lifetime", lifetime}, {"quantity", quantity}}; }

FillCorrelations fill_ratio_correlations(const FillGrid& grid) {
    std::vector<double> ratio, level, lifetime, quantity;
    for (const auto& s : grid.samples) {
        ratio.push_back(s.ratio);
        level.push_back(s.level);
        lifetime.push_back(s.lifetime);
        quantity.push_back(static_cast<double>(s.quantity));
    }
    FillCorrelations c;
    if (ratio.size() < 2) return c;
    c.level = spearman(level, ratio);
    c.lifetime = spearman(lifetime, ratio);
    c.quantity = spearman(quantity, ratio);
    return c;
}

// ------------------------------------------------------------- mid-price labels

const char* to_string(MoveLabel l) {
    switch (l) {
        case MoveLabel::Down: return "down";
        case MoveLabel::Stationary: return "stationary";
        case MoveLabel::Up: return "up";
    }
    return "?";
}

namespace {

MoveLabel classify(double m_minus, double m_plus, double anchor_mid, double threshold_bp) {
    const double r = (m_plus - m_minus) / anchor_mid;
    const double thr = threshold_bp / 1e4;
    if (r > thr) return MoveLabel::Up;
    if (r < -thr) return MoveLabel::Down;
    return MoveLabel::Stationary;
}

double past_mean(std::span<const double> mids, std::size_t anchor, std::size_t k) {
    double s = 0.0;
    for (std::size_t i = anchor + 1 - k; i <= anchor; ++i) s += mids[i];
    return s / static_cast<double>(k);
}

void check_history(std::span<const double> mids, std::size_t anchor, std::size_t k) {
    if (k < 1) throw ValueError("label horizon must be >= 1");
    if (anchor + 1 < k || anchor + k >= mids.size())
        throw InsufficientHistory("anchor " + std::to_string(anchor) + " needs " + std::to_string(k) +
                                  " mids on both sides (have " + std::to_string(mids.size()) + ")");
}

}  // namespace

std::vector<double> record_mids(const std::vector<EventRecord>& records) {
    std::vector<double> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(quoted_mid(r, out.empty() ? kNaN : out.back()));
    return out;
}

MoveLabel label_at(std::span<const double> mids, std::size_t anchor, const LabelOptions& opts) {
    check_history(mids, anchor, opts.k);
    double plus = 0.0;
    for (std::size_t i = anchor + 1; i <= anchor + opts.k; ++i) plus += mids[i];
    return classify(past_mean(mids, anchor, opts.k), plus / static_cast<double>(opts.k), mids[anchor], opts.threshold_bp);
}

std::vector<MoveLabel> midprice_labels(std::span<const double> mids, std::span<const std::size_t> anchors,
                                       const LabelOptions& opts) {
    std::vector<MoveLabel> out;
    out.reserve(anchors.size());
    for (auto a : anchors) out.push_back(label_at(mids, a, opts));
    return out;
}

std::vector<MarketTracker> trackers_at(const std::vector<EventRecord>& records, std::span<const std::size_t> anchors,
                                       double tick_size, const std::array<double, 4>& horizons) {
    if (!std::is_sorted(anchors.begin(), anchors.end())) throw ValueError("anchors must be sorted");
    std::vector<MarketTracker> out;
    if (anchors.empty()) return out;
    if (anchors.back() >= records.size()) throw ValueError("anchor beyond the end of the log");
    MarketTracker tracker(records.front().book(tick_size), horizons);
    tracker.mutable_book().set_session_time(records.front().t);
    const QueueInitSampler unused = QueueInitSampler::constant(1);
    Rng rng(0);
    std::size_t i = 0;
    for (auto a : anchors) {
        for (; i < a; ++i) {
            tracker.apply(records[i].event(), unused, rng);
            // the log's own snapshot is authoritative after reference moves
            auto& book = tracker.mutable_book();
            book = records[i + 1].book(tick_size);
            book.set_session_time(records[i].t);
        }
        out.push_back(tracker);
    }
    return out;
}

std::vector<MoveLabel> simulate_forward_classify(const IntensityModel& model, const std::vector<EventRecord>& records,
                                                 std::span<const double> mids, std::span<const std::size_t> anchors,
                                                 const LabelOptions& opts, std::uint64_t seed, unsigned threads) {
    for (auto a : anchors) check_history(mids, a, opts.k);
    const auto trackers = trackers_at(records, anchors);
    std::vector<MoveLabel> out(anchors.size(), MoveLabel::Stationary);
    parallel_for(anchors.size(), threads, [&](std::size_t i) {
        const auto a = anchors[i];
        const double t0 = a > 0 ? records[a - 1].t : records[a].t;
        Simulator sim(model, trackers[i], derive_seed(seed, i), t0, false);
        double plus = 0.0;
        std::size_t n = 0;
        const double until = std::nextafter(kSessionLength, 0.0);
        while (n < opts.k && sim.step(until)) {
            plus += mid_ticks(sim.tracker().book());
            ++n;
        }
        if (n > 0) out[i] = classify(past_mean(mids, a, opts.k), plus / static_cast<double>(n), mids[a], opts.threshold_bp);
    });
    return out;
}

ordered_json ClassificationScore::to_json() const {
    ordered_json j;
    j["labels"] = {"down", "stationary", "up"};
    j["confusion"] = confusion;
    j["balanced_accuracy"] = balanced_accuracy;
    j["macro_f1"] = macro_f1;
    return j;
}

ClassificationScore score_labels(std::span<const MoveLabel> truth, std::span<const MoveLabel> predicted) {
    if (truth.size() != predicted.size()) throw ShapeMismatch("label vectors differ in length");
    ClassificationScore s;
    for (std::size_t i = 0; i < truth.size(); ++i)
        ++s.confusion[static_cast<std::size_t>(truth[i])][static_cast<std::size_t>(predicted[i])];
    double recall_sum = 0.0, f1_sum = 0.0;
    int recall_n = 0, f1_n = 0;
    for (std::size_t c = 0; c < 3; ++c) {
        double support = 0.0, predicted_c = 0.0;
        for (std::size_t k = 0; k < 3; ++k) {
            support += static_cast<double>(s.confusion[c][k]);
            predicted_c += static_cast<double>(s.confusion[k][c]);
        }
        const double tp = static_cast<double>(s.confusion[c][c]);
        if (support > 0.0) {
            recall_sum += tp / support;
            ++recall_n;
        }
        if (support > 0.0 || predicted_c > 0.0) {
            f1_sum += 2.0 * tp / (support + predicted_c);
            ++f1_n;
        }
    }
    s.balanced_accuracy = recall_n > 0 ? recall_sum / recall_n : 0.0;
    s.macro_f1 = f1_n > 0 ? f1_sum / f1_n : 0.0;
    return s;
}

// ------------------------------------------------------------------- reports

void write_vector_csv(const std::string& path, const std::string& header, const std::vector<std::vector<double>>& rows) {
    auto out = open_csv(path);
    out << header << '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
        out << '\n';
    }
}

}  // namespace lobqr
