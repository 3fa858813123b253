#include "lobqr/models.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "lobqr/errors.hpp"

namespace lobqr {
namespace {

int slot_of(int level) { return level < 0 ? kDefaultDepth + level : kDefaultDepth + level - 1; }
int level_of(int slot) { return slot < kDefaultDepth ? slot - kDefaultDepth : slot - kDefaultDepth + 1; }

std::string key3(EventType type, const std::string& s, std::int64_t n) {
    return std::string(1, to_char(type)) + "|" + s + "|" + std::to_string(n);
}

std::int64_t parse_i64(const std::string& s) {
    std::size_t pos = 0;
    const auto v = std::stoll(s, &pos);
    if (pos != s.size()) throw FormatError("'" + s + "' is not an integer");
    return v;
}

std::vector<std::string> split_key(const std::string& key) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= key.size(); ++i) {
        if (i == key.size() || key[i] == '|') {
            parts.push_back(key.substr(start, i - start));
            start = i + 1;
        }
    }
    if (parts.size() != 3 || parts[0].size() != 1) throw FormatError("table key '" + key + "' is not of the form type|size|n");
    return parts;
}

ordered_json dist_json(const DiscreteDistribution& d) {
    ordered_json j = ordered_json::object();
    for (const auto& [v, p] : d.as_map()) j[std::to_string(v)] = p;
    return j;
}

DiscreteDistribution dist_from(const json& j) {
    std::map<std::int64_t, double> w;
    for (const auto& [k, v] : j.items()) w[parse_i64(k)] = v.get<double>();
    return DiscreteDistribution(w);
}

void init_output(Mlp& net, const Eigen::VectorXd& bias) {
    const std::size_t out = net.spec().hidden.size();
    net.params()[net.weight_param(out)] *= 0.1;
    net.params()[net.bias_param(out)].col(0) = bias;
}

void check_layout(const Mlp& net, InputKind kind, int outputs, const char* what) {
    if (net.feature_schema() != InputLayout::make(kind).schema())
        throw VersionMismatch(std::string(what) + " network expects features '" + net.feature_schema() + "', not '" +
                              InputLayout::make(kind).schema() + "'");
    if (net.spec().outputs != outputs) throw ShapeMismatch(std::string(what) + " network has the wrong output width");
}

// Buffers reused across calls on the same thread.
Inputs& scratch(const InputLayout& layout, Eigen::Index cols) {
    thread_local Inputs buf;
    if (buf.numeric.rows() != layout.numeric || buf.numeric.cols() != cols ||
        buf.categorical.rows() != static_cast<Eigen::Index>(layout.cardinalities.size()))
        buf.resize(layout, cols);
    return buf;
}

}  // namespace

std::uint64_t QrTable::visits(std::int64_t n) const {
    const auto it = counts.find(n);
    if (it == counts.end()) return 0;
    return it->second[0] + it->second[1] + it->second[2];
}

double QrTable::mean_dt(std::int64_t n) const {
    const auto v = visits(n);
    if (v == 0) throw ValueError("queue size " + std::to_string(n) + " was never visited");
    return dt_sum.at(n) / static_cast<double>(v);
}

double QrTable::intensity(EventType type, std::int64_t n) const {
    const auto v = visits(n);
    if (v == 0) throw ValueError("queue size " + std::to_string(n) + " was never visited");
    const double share = static_cast<double>(counts.at(n)[static_cast<std::size_t>(index_of(type))]) / static_cast<double>(v);
    return share / (dt_sum.at(n) / static_cast<double>(v));
}

std::int64_t QrTable::clamp(std::int64_t n) const {
    if (counts.empty()) throw ValueError("empty intensity table");
    const auto hi = counts.lower_bound(n);
    if (hi != counts.end() && hi->first == n) return n;
    if (hi == counts.begin()) return hi->first;
    const auto lo = std::prev(hi);
    if (hi == counts.end()) return lo->first;
    return (n - lo->first) <= (hi->first - n) ? lo->first : hi->first;
}

ordered_json QrTable::to_json() const {
    ordered_json j;
    ordered_json lam = ordered_json::object(), cnt = ordered_json::object(), dts = ordered_json::object();
    for (const auto& [n, c] : counts) {
        for (int e = 0; e < kEventTypes; ++e) {
            const auto type = static_cast<EventType>(e);
            lam[key3(type, "*", n)] = intensity(type, n);
        }
        cnt[std::to_string(n)] = c;
        dts[std::to_string(n)] = dt_sum.at(n);
    }
    j["intensity"] = lam;
    j["counts"] = cnt;
    j["dt_sum"] = dts;
    return j;
}

QrTable QrTable::from_json(const json& j) {
    QrTable t;
    for (const auto& [k, v] : j.at("counts").items()) t.counts[parse_i64(k)] = v.get<std::array<std::uint64_t, kEventTypes>>();
    for (const auto& [k, v] : j.at("dt_sum").items()) t.dt_sum[parse_i64(k)] = v.get<double>();
    if (t.counts.size() != t.dt_sum.size()) throw FormatError("table counts and interval sums disagree");
    return t;
}

double SaqrTable::intensity(EventType type, std::int64_t size, std::int64_t n) const {
    const auto it = counts.find(n);
    if (it == counts.end()) throw ValueError("queue size " + std::to_string(n) + " was never visited");
    std::uint64_t v = 0;
    for (const auto& [k, c] : it->second) v += c;
    const auto cell = it->second.find({index_of(type), std::min(size, size_cap > 0 ? size_cap : size)});
    const double c = cell == it->second.end() ? 0.0 : static_cast<double>(cell->second);
    return (c / static_cast<double>(v)) / (dt_sum.at(n) / static_cast<double>(v));
}

QrTable SaqrTable::marginal() const {
    QrTable t;
    for (const auto& [n, cells] : counts) {
        auto& c = t.counts[n];
        c.fill(0);
        for (const auto& [key, count] : cells) c[static_cast<std::size_t>(key.first)] += count;
        t.dt_sum[n] = dt_sum.at(n);
    }
    return t;
}

ordered_json SaqrTable::to_json() const {
    ordered_json j;
    j["size_cap"] = size_cap;
    ordered_json lam = ordered_json::object(), cnt = ordered_json::object(), dts = ordered_json::object();
    for (const auto& [n, cells] : counts) {
        for (const auto& [key, c] : cells) {
            const auto type = static_cast<EventType>(key.first);
            lam[key3(type, std::to_string(key.second), n)] = intensity(type, key.second, n);
            cnt[key3(type, std::to_string(key.second), n)] = c;
        }
        dts[std::to_string(n)] = dt_sum.at(n);
    }
    j["intensity"] = lam;
    j["counts"] = cnt;
    j["dt_sum"] = dts;
    return j;
}

SaqrTable SaqrTable::from_json(const json& j) {
    SaqrTable t;
    t.size_cap = j.at("size_cap").get<std::int64_t>();
    for (const auto& [k, v] : j.at("counts").items()) {
        const auto parts = split_key(k);
        t.counts[parse_i64(parts[2])][{index_of(event_type_from_char(parts[0][0])), parse_i64(parts[1])}] =
            v.get<std::uint64_t>();
    }
    for (const auto& [k, v] : j.at("dt_sum").items()) t.dt_sum[parse_i64(k)] = v.get<double>();
    return t;
}

QrTable qr_estimate(std::span<const QrSample> samples) {
    QrTable t;
    for (const auto& s : samples) {
        auto [it, fresh] = t.counts.try_emplace(s.n);
        if (fresh) it->second.fill(0);
        ++it->second[static_cast<std::size_t>(index_of(s.type))];
        t.dt_sum[s.n] += s.dt;
    }
    return t;
}

SaqrTable saqr_estimate(std::span<const QrSample> samples, std::int64_t size_cap) {
    SaqrTable t;
    if (size_cap <= 0 && !samples.empty()) {
        std::vector<std::int64_t> sizes;
        sizes.reserve(samples.size());
        for (const auto& s : samples) sizes.push_back(s.size);
        const auto idx = static_cast<std::size_t>(std::ceil(0.999 * static_cast<double>(sizes.size()))) - 1;
        std::nth_element(sizes.begin(), sizes.begin() + static_cast<std::ptrdiff_t>(idx), sizes.end());
        size_cap = sizes[idx];
    }
    t.size_cap = size_cap;
    for (const auto& s : samples) {
        ++t.counts[s.n][{index_of(s.type), std::min(s.size, size_cap)}];
        t.dt_sum[s.n] += s.dt;
    }
    return t;
}

std::vector<QrSample> table_samples(const std::vector<EventRecord>& records, const AesTable& aes) {
    const auto segments = segment_by_ref_price(records);
    const auto dt = queue_intervals(records, segments);
    std::vector<QrSample> out;
    out.reserve(records.size());
    for (std::size_t k = 0; k < records.size(); ++k) {
        if (!dt[k]) continue;
        const auto& r = records[k];
        out.push_back({r.type, normalize_queue(static_cast<double>(r.queue(r.level)), aes.at_or_unit(r.level)), r.size, *dt[k],
                       r.level});
    }
    return out;
}

double dqr_nll(std::span<const double> lambda, EventType realized, double dt) {
    double total = 0.0;
    for (double l : lambda) total += std::max(l, kIntensityFloor);
    return total * dt - std::log(std::max(lambda[static_cast<std::size_t>(index_of(realized))], kIntensityFloor));
}

double mdqr_nll(std::span<const double> lambda, int realized_category, double dt) {
    double total = 0.0;
    for (double l : lambda) total += std::max(l, kIntensityFloor);
    return total * dt - std::log(std::max(lambda[static_cast<std::size_t>(realized_category)], kIntensityFloor));
}

double size_ce_loss(std::span<const double> probs, int realized_class) {
    return -std::log(std::max(probs[static_cast<std::size_t>(realized_class)], kIntensityFloor));
}

Intensities predict_intensities(const IntensityModel& model, const StateVector& s) {
    Intensities out{};
    model.intensities(s, out);
    return out;
}

QrModel::QrModel(std::vector<QrTable> tables, AesTable aes) : tables_(std::move(tables)), aes_(std::move(aes)) {
    if (tables_.size() != 1 && tables_.size() != static_cast<std::size_t>(kDefaultDepth))
        throw ShapeMismatch("a table model needs 1 or 5 tables");
}

const QrTable& QrModel::table(int level) const {
    return tables_.size() == 1 ? tables_.front() : tables_[static_cast<std::size_t>(std::abs(level) - 1)];
}

std::int64_t QrModel::unit(int level) const {
    return std::max<std::int64_t>(1, std::llround(aes_.at_or_unit(level)));
}

void QrModel::intensities(const StateVector& s, Intensities& out) const {
    for (int slot = 0; slot < kLevels; ++slot) {
        const int level = level_of(slot);
        const auto& t = table(level);
        for (int e = 0; e < kEventTypes; ++e) out[static_cast<std::size_t>(slot * kEventTypes + e)] = 0.0;
        if (t.empty()) continue;
        const auto n = t.clamp(normalize_queue(static_cast<double>(s.queues[static_cast<std::size_t>(slot)]), aes_.at_or_unit(level)));
        for (int e = 0; e < kEventTypes; ++e)
            out[static_cast<std::size_t>(slot * kEventTypes + e)] = t.intensity(static_cast<EventType>(e), n);
    }
}

std::int64_t QrModel::sample_size(EventType, int level, const StateVector&, Rng&) const { return unit(level); }

ordered_json QrModel::to_json() const {
    ordered_json j;
    j["kind"] = kind();
    j["schema_version"] = kModelSchemaVersion;
    j["aes"] = aes_to_json(aes_);
    ordered_json ts = ordered_json::array();
    for (const auto& t : tables_) ts.push_back(t.to_json());
    j["tables"] = ts;
    j["queue_init"] = queue_init_to_json(queue_init_);
    if (!metadata.is_null()) j["training"] = metadata;
    return j;
}

SaqrModel::SaqrModel(std::vector<SaqrTable> tables, AesTable aes) : tables_(std::move(tables)), aes_(std::move(aes)) {
    if (tables_.size() != 1 && tables_.size() != static_cast<std::size_t>(kDefaultDepth))
        throw ShapeMismatch("a table model needs 1 or 5 tables");
    for (const auto& t : tables_) marginals_.push_back(t.marginal());
}

const SaqrTable& SaqrModel::table(int level) const {
    return tables_.size() == 1 ? tables_.front() : tables_[static_cast<std::size_t>(std::abs(level) - 1)];
}

void SaqrModel::intensities(const StateVector& s, Intensities& out) const {
    for (int slot = 0; slot < kLevels; ++slot) {
        const int level = level_of(slot);
        const auto& t = marginals_.size() == 1 ? marginals_.front() : marginals_[static_cast<std::size_t>(std::abs(level) - 1)];
        for (int e = 0; e < kEventTypes; ++e) out[static_cast<std::size_t>(slot * kEventTypes + e)] = 0.0;
        if (t.empty()) continue;
        const auto n = t.clamp(normalize_queue(static_cast<double>(s.queues[static_cast<std::size_t>(slot)]), aes_.at_or_unit(level)));
        for (int e = 0; e < kEventTypes; ++e)
            out[static_cast<std::size_t>(slot * kEventTypes + e)] = t.intensity(static_cast<EventType>(e), n);
    }
}

std::int64_t SaqrModel::sample_size(EventType type, int level, const StateVector& s, Rng& rng) const {
    const auto& t = table(level);
    const auto& m = marginals_.size() == 1 ? marginals_.front() : marginals_[static_cast<std::size_t>(std::abs(level) - 1)];
    if (m.empty()) return 1;
    const auto n = m.clamp(normalize_queue(static_cast<double>(s.queues[static_cast<std::size_t>(slot_of(level))]), aes_.at_or_unit(level)));
    const auto& cells = t.counts.at(n);
    std::vector<double> w;
    std::vector<std::int64_t> sizes;
    for (const auto& [key, c] : cells) {
        if (key.first != index_of(type)) continue;
        sizes.push_back(key.second);
        w.push_back(static_cast<double>(c));
    }
    if (sizes.empty()) return 1;
    return sizes[rng.categorical(w)];
}

ordered_json SaqrModel::to_json() const {
    ordered_json j;
    j["kind"] = kind();
    j["schema_version"] = kModelSchemaVersion;
    j["aes"] = aes_to_json(aes_);
    ordered_json ts = ordered_json::array();
    for (const auto& t : tables_) ts.push_back(t.to_json());
    j["tables"] = ts;
    j["queue_init"] = queue_init_to_json(queue_init_);
    if (!metadata.is_null()) j["training"] = metadata;
    return j;
}

DqrModel::DqrModel(Mlp net, AesTable aes)
    : net_(std::move(net)), aes_(std::move(aes)), layout_(InputLayout::make(InputKind::Queue)) {
    check_layout(net_, InputKind::Queue, kEventTypes, "single-queue");
}

void DqrModel::intensities(const StateVector& s, Intensities& out) const {
    Inputs& x = scratch(layout_, kLevels);
    for (int slot = 0; slot < kLevels; ++slot) encode(s, layout_, x, slot, level_of(slot));
    const Eigen::MatrixXd o = net_.infer(x);
    for (int slot = 0; slot < kLevels; ++slot)
        for (int e = 0; e < kEventTypes; ++e)
            out[static_cast<std::size_t>(slot * kEventTypes + e)] = std::max(o(e, slot), kIntensityFloor);
}

std::array<double, kEventTypes> DqrModel::queue_intensities(const StateVector& s, int level) const {
    Inputs& x = scratch(layout_, 1);
    encode(s, layout_, x, 0, level);
    const Eigen::MatrixXd o = net_.infer(x);
    return {std::max(o(0, 0), kIntensityFloor), std::max(o(1, 0), kIntensityFloor), std::max(o(2, 0), kIntensityFloor)};
}

std::int64_t DqrModel::sample_size(EventType, int level, const StateVector&, Rng&) const {
    return std::max<std::int64_t>(1, std::llround(aes_.at_or_unit(level)));
}

ordered_json DqrModel::to_json() const {
    ordered_json j;
    j["kind"] = kind();
    j["schema_version"] = kModelSchemaVersion;
    j["aes"] = aes_to_json(aes_);
    j["output_layout"] = "per queue: L, C, M";
    j["net"] = net_.to_json();
    j["queue_init"] = queue_init_to_json(queue_init_);
    if (!metadata.is_null()) j["training"] = metadata;
    return j;
}

SizeModel::SizeModel(Mlp net) : net_(std::move(net)), layout_(InputLayout::make(InputKind::BookSized)) {
    check_layout(net_, InputKind::BookSized, kSizeClasses, "size");
}

Eigen::VectorXd SizeModel::probabilities(EventType type, int level, const StateVector& s) const {
    Inputs& x = scratch(layout_, 1);
    encode(s, layout_, x, 0, level, type);
    return net_.infer(x).col(0);
}

std::int64_t SizeModel::sample(EventType type, int level, const StateVector& s, Rng& rng) const {
    const Eigen::VectorXd p = probabilities(type, level, s);
    return static_cast<std::int64_t>(rng.categorical(std::span<const double>(p.data(), static_cast<std::size_t>(p.size())), 1.0)) + 1;
}

MdqrModel::MdqrModel(Mlp intensity, std::shared_ptr<const SizeModel> sizes)
    : net_(std::move(intensity)), sizes_(std::move(sizes)), layout_(InputLayout::make(InputKind::Book)) {
    check_layout(net_, InputKind::Book, kCategories, "whole-book");
    if (!sizes_) throw ValueError("whole-book model needs a size model");
}

void MdqrModel::intensities(const StateVector& s, Intensities& out) const {
    Inputs& x = scratch(layout_, 1);
    encode(s, layout_, x, 0);
    const Eigen::MatrixXd o = net_.infer(x);
    for (int i = 0; i < kCategories; ++i) out[static_cast<std::size_t>(i)] = std::max(o(i, 0), kIntensityFloor);
}

std::int64_t MdqrModel::sample_size(EventType type, int level, const StateVector& s, Rng& rng) const {
    return sizes_->sample(type, level, s, rng);
}

ordered_json MdqrModel::to_json() const {
    ordered_json j;
    j["kind"] = kind();
    j["schema_version"] = kModelSchemaVersion;
    j["output_layout"] = "category = slot * 3 + type; slots are levels -5..-1, 1..5; types L, C, M";
    j["net"] = net_.to_json();
    j["size_model"] = size_model_file;
    j["queue_init"] = queue_init_to_json(queue_init_);
    if (!metadata.is_null()) j["training"] = metadata;
    return j;
}

ordered_json FrozenModel::to_json() const {
    ordered_json j;
    j["kind"] = kind();
    j["schema_version"] = kModelSchemaVersion;
    j["rates"] = std::vector<double>(rates_.begin(), rates_.end());
    j["queue_init"] = queue_init_to_json(queue_init_);
    return j;
}

SyntheticTruthModel::SyntheticTruthModel(SyntheticSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    queue_init_ = QueueInitSampler(spec_.queue_init);
}

void SyntheticTruthModel::intensities(const StateVector& s, Intensities& out) const {
    for (int slot = 0; slot < kLevels; ++slot) {
        const int level = level_of(slot);
        for (int e = 0; e < kEventTypes; ++e)
            out[static_cast<std::size_t>(slot * kEventTypes + e)] =
                spec_.intensity(static_cast<EventType>(e), level, s.queues[static_cast<std::size_t>(slot)], s.hour,
                                s.last_event[static_cast<std::size_t>(slot)]);
    }
}

std::int64_t SyntheticTruthModel::sample_size(EventType type, int level, const StateVector&, Rng& rng) const {
    return spec_.sizes_for(level)[static_cast<std::size_t>(index_of(type))].sample(rng);
}

ordered_json SyntheticTruthModel::to_json() const {
    ordered_json j;
    j["kind"] = kind();
    j["schema_version"] = kModelSchemaVersion;
    j["spec"] = spec_.to_json();
    return j;
}

ordered_json queue_init_to_json(const QueueInitSampler& q) {
    ordered_json j;
    ordered_json levels = ordered_json::object();
    for (const auto& [level, d] : q.levels()) levels[std::to_string(level)] = dist_json(d);
    j["levels"] = levels;
    if (!q.fallback().empty()) j["fallback"] = dist_json(q.fallback());
    return j;
}

QueueInitSampler queue_init_from_json(const json& j) {
    QueueInitSampler q;
    for (const auto& [k, v] : j.at("levels").items()) q.set_level(static_cast<int>(parse_i64(k)), dist_from(v));
    if (j.contains("fallback")) q.set_fallback(dist_from(j.at("fallback")));
    return q;
}

ordered_json aes_to_json(const AesTable& aes) {
    ordered_json j = ordered_json::object();
    for (const auto& [level, v] : aes.by_level) j[std::to_string(level)] = v;
    return j;
}

AesTable aes_from_json(const json& j) {
    AesTable a;
    for (const auto& [k, v] : j.items()) a.by_level[static_cast<int>(parse_i64(k))] = v.get<double>();
    for (int level = -kDefaultDepth; level <= kDefaultDepth; ++level)
        if (level != 0 && !a.has(level)) a.missing_levels.push_back(level);
    return a;
}

void save_model(const IntensityModel& model, const std::string& path) {
    save_json_file(path, model.to_json());
    if (const auto* m = dynamic_cast<const MdqrModel*>(&model)) {
        const auto dir = std::filesystem::path(path).parent_path();
        save_json_file((dir / m->size_model_file).string(), m->size_model().net().to_json());
    }
}

std::unique_ptr<IntensityModel> model_from_json(const json& j, const std::string& base_dir) {
    try {
        if (!j.is_object()) throw FormatError("model document is not an object");
        const auto kind = j.at("kind").get<std::string>();
        if (j.value("schema_version", kModelSchemaVersion) != kModelSchemaVersion)
            throw VersionMismatch("unsupported model schema version");
        std::unique_ptr<IntensityModel> model;
        if (kind == "qr" || kind == "saqr") {
            const auto aes = aes_from_json(j.at("aes"));
            if (kind == "qr") {
                std::vector<QrTable> ts;
                for (const auto& t : j.at("tables")) ts.push_back(QrTable::from_json(t));
                model = std::make_unique<QrModel>(std::move(ts), aes);
            } else {
                std::vector<SaqrTable> ts;
                for (const auto& t : j.at("tables")) ts.push_back(SaqrTable::from_json(t));
                model = std::make_unique<SaqrModel>(std::move(ts), aes);
            }
        } else if (kind == "dqr") {
            model = std::make_unique<DqrModel>(Mlp::from_json(j.at("net"), InputLayout::make(InputKind::Queue).schema()),
                                               aes_from_json(j.at("aes")));
        } else if (kind == "mdqr") {
            const auto file = j.at("size_model").get<std::string>();
            auto sizes = std::make_shared<SizeModel>(
                Mlp::load((std::filesystem::path(base_dir) / file).string(), InputLayout::make(InputKind::BookSized).schema()));
            auto m = std::make_unique<MdqrModel>(Mlp::from_json(j.at("net"), InputLayout::make(InputKind::Book).schema()),
                                                 std::move(sizes));
            m->size_model_file = file;
            model = std::move(m);
        } else if (kind == "frozen") {
            const auto rates = j.at("rates").get<std::vector<double>>();
            if (rates.size() != static_cast<std::size_t>(kCategories)) throw FormatError("frozen model needs 30 rates");
            Intensities r{};
            std::copy(rates.begin(), rates.end(), r.begin());
            model = std::make_unique<FrozenModel>(r);
        } else if (kind == "synthetic") {
            return std::make_unique<SyntheticTruthModel>(SyntheticSpec::from_json(j.at("spec")));
        } else {
            throw FormatError("unknown model kind '" + kind + "'");
        }
        if (j.contains("queue_init")) model->set_queue_init(queue_init_from_json(j.at("queue_init")));
        if (j.contains("training")) model->metadata = j.at("training");
        return model;
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed model document: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw FormatError(std::string("malformed model document: ") + e.what());
    }
}

std::unique_ptr<IntensityModel> load_model(const std::string& path) {
    const auto dir = std::filesystem::path(path).parent_path().string();
    return model_from_json(load_json_file(path), dir.empty() ? "." : dir);
}

namespace {

template <typename Table, typename Estimate>
std::vector<Table> per_depth(const std::vector<QrSample>& samples, bool pool, Estimate estimate) {
    std::vector<Table> out;
    if (pool) {
        out.push_back(estimate(samples));
        return out;
    }
    for (int d = 1; d <= kDefaultDepth; ++d) {
        std::vector<QrSample> sub;
        for (const auto& s : samples)
            if (std::abs(s.level) == d) sub.push_back(s);
        out.push_back(estimate(sub));
    }
    return out;
}

}  // namespace

std::unique_ptr<QrModel> fit_qr(const std::vector<EventRecord>& records, bool pool_depths) {
    const auto aes = compute_aes(records);
    const auto samples = table_samples(records, aes);
    auto m = std::make_unique<QrModel>(
        per_depth<QrTable>(samples, pool_depths, [](const std::vector<QrSample>& s) { return qr_estimate(s); }), aes);
    m->set_queue_init(collect_queue_init(records));
    return m;
}

std::unique_ptr<SaqrModel> fit_saqr(const std::vector<EventRecord>& records, bool pool_depths) {
    const auto aes = compute_aes(records);
    const auto samples = table_samples(records, aes);
    auto m = std::make_unique<SaqrModel>(
        per_depth<SaqrTable>(samples, pool_depths, [](const std::vector<QrSample>& s) { return saqr_estimate(s); }), aes);
    m->set_queue_init(collect_queue_init(records));
    return m;
}

namespace {

TrainedNet train_intensity(const DatasetSplit& data, const NeuralOptions& opts, InputKind kind, int outputs,
                           std::vector<int> default_hidden, LossKind loss) {
    MlpSpec spec;
    spec.layout = InputLayout::make(kind);
    spec.hidden = opts.hidden.empty() ? std::move(default_hidden) : opts.hidden;
    spec.outputs = outputs;
    spec.output = OutputKind::Relu;
    Mlp net(spec, opts.init_seed);
    // start every output at its constant-rate estimate
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(outputs);
    double time = 0.0;
    for (std::size_t i = 0; i < data.train.size(); ++i) {
        counts(data.train.label[i]) += 1.0;
        time += data.train.dt[i];
    }
    if (!(time > 0.0)) throw ValueError("training intervals sum to zero");
    Eigen::VectorXd rate = counts / time;
    const double floor = 0.01 * (rate.array() > 0.0).select(rate.array(), rate.maxCoeff()).minCoeff();
    rate = rate.cwiseMax(floor);
    init_output(net, rate);
    TrainedNet out{std::move(net), {}, data.train.size(), data.validation.size(), 0};
    out.history = train_early_stop(out.net, TrainData::of(data.train), TrainData::of(data.validation), opts.train, loss);
    return out;
}

}  // namespace

TrainedNet train_dqr(const DatasetSplit& data, const NeuralOptions& opts) {
    return train_intensity(data, opts, InputKind::Queue, kEventTypes, {128, 32}, LossKind::DqrNll);
}

TrainedNet train_mdqr(const DatasetSplit& data, const NeuralOptions& opts) {
    return train_intensity(data, opts, InputKind::Book, kCategories, {256, 64}, LossKind::MdqrNll);
}

TrainedNet train_size(const DatasetSplit& data, const NeuralOptions& opts) {
    MlpSpec spec;
    spec.layout = InputLayout::make(InputKind::BookSized);
    spec.hidden = opts.hidden.empty() ? std::vector<int>{256, 64} : opts.hidden;
    spec.outputs = kSizeClasses;
    spec.output = OutputKind::Softmax;
    Mlp net(spec, opts.init_seed);
    Eigen::VectorXd freq = Eigen::VectorXd::Constant(kSizeClasses, 0.01);
    for (int y : data.train.label) freq(y) += 1.0;
    freq /= freq.sum();
    init_output(net, freq.array().log().matrix());
    TrainedNet out{std::move(net), {}, data.train.size(), data.validation.size(), data.train.clipped};
    out.history =
        train_early_stop(out.net, TrainData::of(data.train), TrainData::of(data.validation), opts.train, LossKind::SizeCe);
    return out;
}

}  // namespace lobqr
