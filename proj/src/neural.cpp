#include "lobqr/neural.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "lobqr/errors.hpp"
#include "lobqr/random.hpp"

namespace lobqr {
namespace {

Eigen::MatrixXd uniform_matrix(Eigen::Index rows, Eigen::Index cols, double bound, Rng& rng) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = (2.0 * rng.uniform() - 1.0) * bound;
    return m;
}

void softmax_columns(Eigen::MatrixXd& m) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        auto c = m.col(j);
        const double mx = c.maxCoeff();
        c = (c.array() - mx).exp().matrix();
        c /= c.sum();
    }
}

ordered_json matrix_json(const std::string& name, const Eigen::MatrixXd& m) {
    std::vector<double> data;
    data.reserve(static_cast<std::size_t>(m.size()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
    ordered_json j;
    j["name"] = name;
    j["rows"] = m.rows();
    j["cols"] = m.cols();
    j["data"] = data;
    return j;
}

Eigen::MatrixXd matrix_from_json(const json& j, Eigen::Index rows, Eigen::Index cols) {
    const auto data = j.at("data").get<std::vector<double>>();
    if (j.at("rows").get<Eigen::Index>() != rows || j.at("cols").get<Eigen::Index>() != cols ||
        data.size() != static_cast<std::size_t>(rows * cols))
        throw FormatError("tensor '" + j.value("name", std::string("?")) + "' has the wrong shape");
    Eigen::MatrixXd m(rows, cols);
    std::size_t k = 0;
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = data[k++];
    return m;
}

Eigen::VectorXd vector_from_json(const json& j, Eigen::Index n) {
    const auto data = j.get<std::vector<double>>();
    if (data.size() != static_cast<std::size_t>(n)) throw FormatError("batch-norm statistics have the wrong length");
    return Eigen::Map<const Eigen::VectorXd>(data.data(), n);
}

std::vector<double> to_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

const char* to_string(LossKind kind) {
    switch (kind) {
        case LossKind::DqrNll: return "dqr_nll";
        case LossKind::MdqrNll: return "mdqr_nll";
        case LossKind::SizeCe: return "size_ce";
    }
    return "?";
}

Mlp::Mlp(MlpSpec spec, std::uint64_t seed) : spec_(std::move(spec)) {
    if (spec_.outputs < 1) throw ShapeMismatch("network needs at least one output");
    for (int w : spec_.hidden)
        if (w < 1) throw ShapeMismatch("hidden widths must be positive");
    Rng rng(seed);
    for (int card : spec_.layout.cardinalities) params_.push_back(uniform_matrix(kEmbeddingDim, card, 0.05, rng));
    int fan_in = spec_.layout.numeric + kEmbeddingDim * static_cast<int>(spec_.layout.cardinalities.size());
    for (int w : spec_.hidden) {
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + w));
        params_.push_back(uniform_matrix(w, fan_in, bound, rng));
        params_.push_back(Eigen::MatrixXd::Zero(w, 1));
        params_.push_back(Eigen::MatrixXd::Ones(w, 1));
        params_.push_back(Eigen::MatrixXd::Zero(w, 1));
        running_mean_.push_back(Eigen::VectorXd::Zero(w));
        running_var_.push_back(Eigen::VectorXd::Ones(w));
        fan_in = w;
    }
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + spec_.outputs));
    params_.push_back(uniform_matrix(spec_.outputs, fan_in, bound, rng));
    params_.push_back(Eigen::MatrixXd::Zero(spec_.outputs, 1));
}

std::size_t Mlp::weight_param(std::size_t layer) const { return spec_.layout.cardinalities.size() + 4 * layer; }

Eigen::MatrixXd Mlp::assemble_input(const Inputs& x) const {
    const auto& layout = spec_.layout;
    const auto n_cat = static_cast<Eigen::Index>(layout.cardinalities.size());
    if (x.numeric.rows() != layout.numeric || x.categorical.rows() != n_cat || x.categorical.cols() != x.numeric.cols())
        throw ShapeMismatch("input block does not match the feature layout " + layout.schema());
    Eigen::MatrixXd in(layout.numeric + kEmbeddingDim * n_cat, x.cols());
    in.topRows(layout.numeric) = x.numeric;
    for (Eigen::Index c = 0; c < n_cat; ++c) {
        const auto& table = params_[static_cast<std::size_t>(c)];
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            const int idx = x.categorical(c, j);
            if (idx < 0 || idx >= table.cols())
                throw ShapeMismatch("categorical input " + std::to_string(c) + " out of range: " + std::to_string(idx));
            in.block(layout.numeric + kEmbeddingDim * c, j, kEmbeddingDim, 1) = table.col(idx);
        }
    }
    return in;
}

ForwardCache Mlp::forward_train(const Inputs& x) const {
    ForwardCache cache;
    cache.input = assemble_input(x);
    const Eigen::MatrixXd* h = &cache.input;
    const double n = static_cast<double>(x.cols());
    for (std::size_t l = 0; l < spec_.hidden.size(); ++l) {
        Eigen::MatrixXd z = params_[weight_param(l)] * *h;
        z.colwise() += params_[bias_param(l)].col(0);
        Eigen::VectorXd mean = z.rowwise().sum() / n;
        z.colwise() -= mean;
        Eigen::VectorXd var = z.array().square().rowwise().sum() / n;
        Eigen::VectorXd inv_std = (var.array() + spec_.bn_eps).rsqrt();
        z = inv_std.asDiagonal() * z;
        Eigen::MatrixXd y = params_[gamma_param(l)].col(0).asDiagonal() * z;
        y.colwise() += params_[beta_param(l)].col(0);
        cache.xhat.push_back(std::move(z));
        cache.inv_std.push_back(std::move(inv_std));
        cache.mean.push_back(std::move(mean));
        cache.var.push_back(std::move(var));
        cache.act.push_back(y.array().tanh().matrix());
        h = &cache.act.back();
    }
    const std::size_t out = spec_.hidden.size();
    cache.logits = params_[weight_param(out)] * *h;
    cache.logits.colwise() += params_[bias_param(out)].col(0);
    cache.output = cache.logits;
    if (spec_.output == OutputKind::Relu) {
        cache.output = cache.output.cwiseMax(0.0);
    } else {
        softmax_columns(cache.output);
    }
    return cache;
}

Eigen::MatrixXd Mlp::infer(const Inputs& x) const {
    Eigen::MatrixXd h = assemble_input(x);
    for (std::size_t l = 0; l < spec_.hidden.size(); ++l) {
        Eigen::MatrixXd z = params_[weight_param(l)] * h;
        const Eigen::VectorXd inv_std = (running_var_[l].array() + spec_.bn_eps).rsqrt();
        const Eigen::VectorXd scale = params_[gamma_param(l)].col(0).cwiseProduct(inv_std);
        const Eigen::VectorXd shift =
            params_[beta_param(l)].col(0) + scale.cwiseProduct(params_[bias_param(l)].col(0) - running_mean_[l]);
        z = scale.asDiagonal() * z;
        z.colwise() += shift;
        h = z.array().tanh().matrix();
    }
    const std::size_t out = spec_.hidden.size();
    Eigen::MatrixXd o = params_[weight_param(out)] * h;
    o.colwise() += params_[bias_param(out)].col(0);
    if (spec_.output == OutputKind::Relu) {
        o = o.cwiseMax(0.0);
    } else {
        softmax_columns(o);
    }
    return o;
}

void Mlp::update_running_stats(const ForwardCache& cache) {
    const double n = static_cast<double>(cache.input.cols());
    const double m = spec_.bn_momentum;
    for (std::size_t l = 0; l < running_mean_.size(); ++l) {
        const double unbias = n > 1.0 ? n / (n - 1.0) : 1.0;
        running_mean_[l] = m * running_mean_[l] + (1.0 - m) * cache.mean[l];
        running_var_[l] = m * running_var_[l] + (1.0 - m) * unbias * cache.var[l];
    }
}

std::vector<Eigen::MatrixXd> Mlp::backward(const ForwardCache& cache, const Inputs& x, LossKind loss,
                                           const std::vector<int>& label, const std::vector<double>& dt,
                                           double scale) const {
    const Eigen::Index n = cache.logits.cols();
    if (static_cast<Eigen::Index>(label.size()) != n) throw ShapeMismatch("label count does not match the batch");
    const double w = scale / static_cast<double>(n);

    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(cache.logits.rows(), n);
    if (loss == LossKind::SizeCe) {
        for (Eigen::Index j = 0; j < n; ++j) {
            const int y = label[static_cast<std::size_t>(j)];
            if (cache.output(y, j) > kIntensityFloor) {
                d.col(j) = cache.output.col(j) * w;
                d(y, j) -= w;
            }
        }
    } else {
        if (static_cast<Eigen::Index>(dt.size()) != n) throw ShapeMismatch("interval count does not match the batch");
        for (Eigen::Index j = 0; j < n; ++j) {
            const int y = label[static_cast<std::size_t>(j)];
            const double t = dt[static_cast<std::size_t>(j)];
            for (Eigen::Index i = 0; i < d.rows(); ++i) {
                const double a = cache.logits(i, j);
                if (a <= kIntensityFloor) continue;
                d(i, j) = w * (t - (i == y ? 1.0 / a : 0.0));
            }
        }
    }

    std::vector<Eigen::MatrixXd> grads(params_.size());
    const std::size_t out = spec_.hidden.size();
    const Eigen::MatrixXd& last = out == 0 ? cache.input : cache.act.back();
    grads[weight_param(out)] = d * last.transpose();
    grads[bias_param(out)] = d.rowwise().sum();
    Eigen::MatrixXd dh = params_[weight_param(out)].transpose() * d;

    for (std::size_t l = out; l-- > 0;) {
        const Eigen::MatrixXd dy = dh.cwiseProduct((1.0 - cache.act[l].array().square()).matrix());
        const auto& xhat = cache.xhat[l];
        grads[gamma_param(l)] = dy.cwiseProduct(xhat).rowwise().sum();
        grads[beta_param(l)] = dy.rowwise().sum();
        const Eigen::MatrixXd dxhat = params_[gamma_param(l)].col(0).asDiagonal() * dy;
        const Eigen::VectorXd sum_d = dxhat.rowwise().sum();
        const Eigen::VectorXd sum_dx = dxhat.cwiseProduct(xhat).rowwise().sum();
        const double nn = static_cast<double>(n);
        Eigen::MatrixXd dz = dxhat * nn;
        dz.colwise() -= sum_d;
        dz -= sum_dx.asDiagonal() * xhat;
        dz = (cache.inv_std[l] / nn).asDiagonal() * dz;
        const Eigen::MatrixXd& below = l == 0 ? cache.input : cache.act[l - 1];
        grads[weight_param(l)] = dz * below.transpose();
        grads[bias_param(l)] = dz.rowwise().sum();
        dh = params_[weight_param(l)].transpose() * dz;
    }

    const auto& layout = spec_.layout;
    for (std::size_t c = 0; c < layout.cardinalities.size(); ++c) {
        Eigen::MatrixXd g = Eigen::MatrixXd::Zero(kEmbeddingDim, layout.cardinalities[c]);
        const auto row = layout.numeric + kEmbeddingDim * static_cast<Eigen::Index>(c);
        for (Eigen::Index j = 0; j < n; ++j)
            g.col(x.categorical(static_cast<Eigen::Index>(c), j)) += dh.block(row, j, kEmbeddingDim, 1);
        grads[c] = std::move(g);
    }
    return grads;
}

double batch_loss(const Eigen::MatrixXd& output, LossKind loss, const std::vector<int>& label,
                  const std::vector<double>& dt, std::size_t first) {
    double total = 0.0;
    for (Eigen::Index j = 0; j < output.cols(); ++j) {
        const auto k = first + static_cast<std::size_t>(j);
        const int y = label[k];
        if (loss == LossKind::SizeCe) {
            total -= std::log(std::max(output(y, j), kIntensityFloor));
        } else {
            const double lam = output.col(j).cwiseMax(kIntensityFloor).sum();
            total += lam * dt[k] - std::log(std::max(output(y, j), kIntensityFloor));
        }
    }
    return output.cols() ? total / static_cast<double>(output.cols()) : 0.0;
}

double batch_loss(const Eigen::MatrixXd& output, LossKind loss, const std::vector<int>& label,
                  const std::vector<double>& dt) {
    return batch_loss(output, loss, label, dt, 0);
}

void adam_step(AdamState& s, std::vector<Eigen::MatrixXd>& params, const std::vector<Eigen::MatrixXd>& grads, double lr) {
    if (grads.size() != params.size()) throw ShapeMismatch("gradient list does not match the parameters");
    if (s.m.empty()) {
        for (const auto& p : params) {
            s.m.push_back(Eigen::MatrixXd::Zero(p.rows(), p.cols()));
            s.v.push_back(Eigen::MatrixXd::Zero(p.rows(), p.cols()));
        }
    }
    ++s.step;
    const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step));
    const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (grads[i].rows() != params[i].rows() || grads[i].cols() != params[i].cols())
            throw ShapeMismatch("gradient shape does not match its parameter");
        s.m[i] = s.beta1 * s.m[i] + (1.0 - s.beta1) * grads[i];
        s.v[i] = s.beta2 * s.v[i] + (1.0 - s.beta2) * grads[i].cwiseAbs2();
        params[i].array() -= lr * (s.m[i].array() / c1) / ((s.v[i].array() / c2).sqrt() + s.eps);
    }
}

void TrainConfig::validate() const {
    if (!(lr_min > 0.0 && lr_min <= lr_max)) throw ConfigError("learning rates need 0 < lr_min <= lr_max");
    if (patience < 1) throw ConfigError("patience must be at least 1");
    if (batch_size < 2) throw ConfigError("batch size must be at least 2");
    if (max_epochs < 1 || fallback_epochs < 1) throw ConfigError("epoch limits must be at least 1");
}

double cyclic_lr(double lr_min, double lr_max, std::size_t cycle_steps, std::size_t step) {
    if (cycle_steps < 2) return lr_min;
    const double pos = static_cast<double>(step % cycle_steps) / static_cast<double>(cycle_steps);
    const double tri = pos < 0.5 ? 2.0 * pos : 2.0 - 2.0 * pos;
    return lr_min + (lr_max - lr_min) * tri;
}

bool EarlyStopper::update(double val_loss) {
    ++epochs_;
    improved_ = epochs_ == 1 || val_loss < best_;
    if (improved_) {
        best_ = val_loss;
        best_epoch_ = epochs_;
        since_best_ = 0;
    } else {
        ++since_best_;
    }
    return since_best_ >= patience_;
}

ordered_json TrainHistory::to_json() const {
    ordered_json j;
    j["best_epoch"] = best_epoch;
    j["seconds"] = seconds;
    j["warnings"] = warnings;
    ordered_json rows = ordered_json::array();
    for (const auto& e : epochs)
        rows.push_back({{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"val_loss", e.val_loss}, {"lr", e.lr_end},
                        {"best", e.best}});
    j["epochs"] = rows;
    return j;
}

double evaluate_loss(const Mlp& net, const TrainData& data, LossKind loss) {
    const std::size_t n = data.size();
    if (n == 0) return 0.0;
    constexpr std::size_t kChunk = 8192;
    double total = 0.0;
    for (std::size_t start = 0; start < n; start += kChunk) {
        const std::size_t len = std::min(kChunk, n - start);
        Inputs chunk;
        chunk.numeric = data.inputs->numeric.middleCols(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(len));
        chunk.categorical =
            data.inputs->categorical.middleCols(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(len));
        total += batch_loss(net.infer(chunk), loss, *data.label, *data.dt, start) * static_cast<double>(len);
    }
    return total / static_cast<double>(n);
}

TrainHistory train_early_stop(Mlp& net, const TrainData& train, const TrainData& validation, const TrainConfig& cfg,
                              LossKind loss, const std::function<void(const EpochRecord&)>& on_epoch) {
    cfg.validate();
    const std::size_t n = train.size();
    if (n == 0) throw ValueError("training set is empty");
    const auto started = std::chrono::steady_clock::now();
    TrainHistory history;
    const bool have_val = validation.size() > 0;
    if (!have_val)
        history.warnings.push_back("validation set is empty; training for a fixed " + std::to_string(cfg.fallback_epochs) +
                                   " epochs");

    const std::size_t batch = std::min(cfg.batch_size, n);
    const std::size_t steps_per_epoch = (n + batch - 1) / batch;
    const std::size_t cycle = cfg.cycle_steps ? cfg.cycle_steps : 4 * steps_per_epoch;
    const std::size_t max_epochs = have_val ? cfg.max_epochs : cfg.fallback_epochs;

    Rng rng(derive_seed(cfg.seed, 0x7261696eULL));
    AdamState adam;
    EarlyStopper stopper(cfg.patience);
    auto best_params = net.params();
    auto best_mean = net.running_mean();
    auto best_var = net.running_var();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<Eigen::Index> cols;
    std::vector<int> lab;
    std::vector<double> dts;
    std::size_t step = 0;
    double lr = cfg.lr_min;

    for (std::size_t epoch = 1; epoch <= max_epochs; ++epoch) {
        for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
        double train_total = 0.0;
        std::size_t seen = 0;
        for (std::size_t start = 0; start < n; start += batch) {
            const std::size_t len = std::min(batch, n - start);
            if (len < 2) continue;
            cols.assign(order.begin() + static_cast<std::ptrdiff_t>(start),
                        order.begin() + static_cast<std::ptrdiff_t>(start + len));
            lab.clear();
            dts.clear();
            for (auto c : cols) {
                lab.push_back((*train.label)[static_cast<std::size_t>(c)]);
                dts.push_back((*train.dt)[static_cast<std::size_t>(c)]);
            }
            const Inputs xb = train.inputs->select(cols);
            const ForwardCache cache = net.forward_train(xb);
            train_total += batch_loss(cache.output, loss, lab, dts) * static_cast<double>(len);
            seen += len;
            const auto grads = net.backward(cache, xb, loss, lab, dts);
            lr = cyclic_lr(cfg.lr_min, cfg.lr_max, cycle, step++);
            adam_step(adam, net.params(), grads, lr);
            net.update_running_stats(cache);
        }
        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = seen ? train_total / static_cast<double>(seen) : 0.0;
        rec.lr_end = lr;
        bool stop = false;
        if (have_val) {
            rec.val_loss = evaluate_loss(net, validation, loss);
            stop = stopper.update(rec.val_loss);
            rec.best = stopper.improved();
            if (rec.best) {
                best_params = net.params();
                best_mean = net.running_mean();
                best_var = net.running_var();
            }
        } else {
            rec.val_loss = rec.train_loss;
            rec.best = true;
        }
        history.epochs.push_back(rec);
        if (on_epoch) on_epoch(rec);
        if (stop) break;
    }
    if (have_val) {
        net.params() = best_params;
        net.running_mean() = best_mean;
        net.running_var() = best_var;
        history.best_epoch = stopper.best_epoch();
        for (auto& e : history.epochs) e.best = e.epoch == history.best_epoch;
    } else {
        history.best_epoch = history.epochs.size();
    }
    history.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return history;
}

ordered_json Mlp::to_json() const {
    ordered_json j;
    j["schema_version"] = kModelSchemaVersion;
    j["feature_schema"] = feature_schema();
    j["input"] = {{"kind", to_string(spec_.layout.kind)},
                  {"numeric", spec_.layout.numeric},
                  {"cardinalities", spec_.layout.cardinalities}};
    j["embedding_dim"] = kEmbeddingDim;
    j["widths"] = spec_.hidden;
    j["outputs"] = spec_.outputs;
    std::vector<std::string> acts(spec_.hidden.size(), "tanh");
    acts.push_back(spec_.output == OutputKind::Relu ? "relu" : "softmax");
    j["activations"] = acts;
    ordered_json bn;
    bn["momentum"] = spec_.bn_momentum;
    bn["eps"] = spec_.bn_eps;
    ordered_json layers = ordered_json::array();
    for (std::size_t l = 0; l < running_mean_.size(); ++l)
        layers.push_back({{"mean", to_vector(running_mean_[l])}, {"var", to_vector(running_var_[l])}});
    bn["layers"] = layers;
    j["batchnorm"] = bn;
    ordered_json ps = ordered_json::array();
    for (std::size_t c = 0; c < spec_.layout.cardinalities.size(); ++c)
        ps.push_back(matrix_json("embedding" + std::to_string(c), params_[c]));
    for (std::size_t l = 0; l <= spec_.hidden.size(); ++l) {
        const std::string tag = l == spec_.hidden.size() ? "out" : std::to_string(l);
        ps.push_back(matrix_json("W" + tag, params_[weight_param(l)]));
        ps.push_back(matrix_json("b" + tag, params_[bias_param(l)]));
        if (l < spec_.hidden.size()) {
            ps.push_back(matrix_json("gamma" + tag, params_[gamma_param(l)]));
            ps.push_back(matrix_json("beta" + tag, params_[beta_param(l)]));
        }
    }
    j["params"] = ps;
    return j;
}

Mlp Mlp::from_json(const json& j, const std::string& expected_feature_schema) {
    try {
        if (!j.is_object()) throw FormatError("model document is not an object");
        const int version = j.at("schema_version").get<int>();
        if (version != kModelSchemaVersion)
            throw VersionMismatch("model schema version " + std::to_string(version) + " is not supported");
        if (j.at("embedding_dim").get<int>() != kEmbeddingDim) throw FormatError("embedding dimension must be 2");
        MlpSpec spec;
        const auto& in = j.at("input");
        spec.layout.kind = input_kind_from_string(in.at("kind").get<std::string>());
        spec.layout.numeric = in.at("numeric").get<int>();
        spec.layout.cardinalities = in.at("cardinalities").get<std::vector<int>>();
        const auto schema = j.at("feature_schema").get<std::string>();
        if (schema != spec.layout.schema() || schema != InputLayout::make(spec.layout.kind).schema())
            throw VersionMismatch("feature schema '" + schema + "' does not match this build's layout");
        if (!expected_feature_schema.empty() && schema != expected_feature_schema)
            throw VersionMismatch("feature schema '" + schema + "' where '" + expected_feature_schema + "' was expected");
        spec.hidden = j.at("widths").get<std::vector<int>>();
        spec.outputs = j.at("outputs").get<int>();
        const auto acts = j.at("activations").get<std::vector<std::string>>();
        if (acts.size() != spec.hidden.size() + 1) throw FormatError("activation list does not match the widths");
        if (acts.back() == "relu") {
            spec.output = OutputKind::Relu;
        } else if (acts.back() == "softmax") {
            spec.output = OutputKind::Softmax;
        } else {
            throw FormatError("unknown output activation '" + acts.back() + "'");
        }
        const auto& bn = j.at("batchnorm");
        spec.bn_momentum = bn.at("momentum").get<double>();
        spec.bn_eps = bn.at("eps").get<double>();

        Mlp net(spec, 0);
        const auto& ps = j.at("params");
        if (!ps.is_array() || ps.size() != net.params_.size()) throw FormatError("parameter list has the wrong length");
        for (std::size_t i = 0; i < net.params_.size(); ++i)
            net.params_[i] = matrix_from_json(ps[i], net.params_[i].rows(), net.params_[i].cols());
        const auto& layers = bn.at("layers");
        if (layers.size() != spec.hidden.size()) throw FormatError("batch-norm statistics do not match the widths");
        for (std::size_t l = 0; l < spec.hidden.size(); ++l) {
            net.running_mean_[l] = vector_from_json(layers[l].at("mean"), spec.hidden[l]);
            net.running_var_[l] = vector_from_json(layers[l].at("var"), spec.hidden[l]);
            if ((net.running_var_[l].array() < 0.0).any()) throw FormatError("negative running variance");
        }
        return net;
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed model document: ") + e.what());
    } catch (const ShapeMismatch& e) {
        throw FormatError(e.what());
    }
}

void Mlp::save(const std::string& path) const { save_json_file(path, to_json()); }

Mlp Mlp::load(const std::string& path, const std::string& expected_feature_schema) {
    return from_json(load_json_file(path), expected_feature_schema);
}

}  // namespace lobqr
