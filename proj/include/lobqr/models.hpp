#pragma once

// Intensity models: closed-form queue-reactive tables (plain and size-aware),
// neural single-queue and whole-book models, and a categorical size model.

#include <array>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "lobqr/event_log.hpp"
#include "lobqr/features.hpp"
#include "lobqr/neural.hpp"
#include "lobqr/synthetic.hpp"

namespace lobqr {

inline constexpr int kCategories = kLevels * kEventTypes;
using Intensities = std::array<double, kCategories>;

/// One event as seen by the table estimators.
struct QrSample {
    EventType type = EventType::Limit;
    std::int64_t n = 0;     // normalized queue size before the event
    std::int64_t size = 1;  // lots
    double dt = 0.0;        // time since the previous event at the queue
    int level = 1;
};

/// lambda(type, n) = (count of type at n / count at n) / (mean dt at n).
struct QrTable {
    std::map<std::int64_t, std::array<std::uint64_t, kEventTypes>> counts;
    std::map<std::int64_t, double> dt_sum;

    std::uint64_t visits(std::int64_t n) const;
    double mean_dt(std::int64_t n) const;
    /// Throws ValueError for an unvisited n.
    double intensity(EventType type, std::int64_t n) const;
    /// Nearest visited n (ties go to the smaller n); the table must be nonempty.
    std::int64_t clamp(std::int64_t n) const;
    bool empty() const { return counts.empty(); }

    ordered_json to_json() const;
    static QrTable from_json(const json& j);
};

/// Size-aware table: lambda(type, s, n).
struct SaqrTable {
    std::map<std::int64_t, std::map<std::pair<int, std::int64_t>, std::uint64_t>> counts;  // n -> (type, s) -> count
    std::map<std::int64_t, double> dt_sum;
    std::int64_t size_cap = 0;  // sizes above it share the tail bucket at size_cap

    double intensity(EventType type, std::int64_t size, std::int64_t n) const;
    /// Sums counts over sizes; the result equals qr_estimate on the same samples.
    QrTable marginal() const;

    ordered_json to_json() const;
    static SaqrTable from_json(const json& j);
};

QrTable qr_estimate(std::span<const QrSample> samples);
/// `size_cap` 0 means the 99.9th percentile of the sample sizes.
SaqrTable saqr_estimate(std::span<const QrSample> samples, std::int64_t size_cap = 0);

/// Samples for table estimation: per-queue intervals inside reference-price
/// segments, queue sizes normalized by the level's AES.
std::vector<QrSample> table_samples(const std::vector<EventRecord>& records, const AesTable& aes);

/// Per-sample losses with the intensity floor.
double dqr_nll(std::span<const double> lambda, EventType realized, double dt);
double mdqr_nll(std::span<const double> lambda, int realized_category, double dt);
double size_ce_loss(std::span<const double> probs, int realized_class);

class IntensityModel {
public:
    virtual ~IntensityModel() = default;
    virtual std::string kind() const = 0;
    /// Rates for the 30 (level, type) categories, index slot * 3 + type.
    virtual void intensities(const StateVector& s, Intensities& out) const = 0;
    virtual std::int64_t sample_size(EventType type, int level, const StateVector& s, Rng& rng) const = 0;
    virtual ordered_json to_json() const = 0;

    const QueueInitSampler& queue_init() const { return queue_init_; }
    void set_queue_init(QueueInitSampler q) { queue_init_ = std::move(q); }

    /// Free-form provenance (training history summary, data hash); saved as "training".
    ordered_json metadata;

protected:
    QueueInitSampler queue_init_;
};

Intensities predict_intensities(const IntensityModel& model, const StateVector& s);

class QrModel : public IntensityModel {
public:
    /// One table for every depth (size 1) or one per depth (size 5).
    QrModel(std::vector<QrTable> tables, AesTable aes);
    std::string kind() const override { return "qr"; }
    void intensities(const StateVector& s, Intensities& out) const override;
    std::int64_t sample_size(EventType type, int level, const StateVector& s, Rng& rng) const override;
    ordered_json to_json() const override;

    const QrTable& table(int level) const;
    const AesTable& aes() const { return aes_; }
    /// Lots per simulated event: max(1, round(AES)).
    std::int64_t unit(int level) const;

private:
    std::vector<QrTable> tables_;
    AesTable aes_;
};

class SaqrModel : public IntensityModel {
public:
    SaqrModel(std::vector<SaqrTable> tables, AesTable aes);
    std::string kind() const override { return "saqr"; }
    void intensities(const StateVector& s, Intensities& out) const override;
    std::int64_t sample_size(EventType type, int level, const StateVector& s, Rng& rng) const override;
    ordered_json to_json() const override;

private:
    const SaqrTable& table(int level) const;
    std::vector<SaqrTable> tables_;
    std::vector<QrTable> marginals_;
    AesTable aes_;
};

class DqrModel : public IntensityModel {
public:
    DqrModel(Mlp net, AesTable aes);
    std::string kind() const override { return "dqr"; }
    void intensities(const StateVector& s, Intensities& out) const override;
    std::int64_t sample_size(EventType type, int level, const StateVector& s, Rng& rng) const override;
    ordered_json to_json() const override;

    const Mlp& net() const { return net_; }
    /// Rates (L, C, M) of one queue.
    std::array<double, kEventTypes> queue_intensities(const StateVector& s, int level) const;

private:
    Mlp net_;
    AesTable aes_;
    InputLayout layout_;
};

class SizeModel {
public:
    explicit SizeModel(Mlp net);
    /// Class probabilities for sizes 1..200.
    Eigen::VectorXd probabilities(EventType type, int level, const StateVector& s) const;
    std::int64_t sample(EventType type, int level, const StateVector& s, Rng& rng) const;
    const Mlp& net() const { return net_; }

private:
    Mlp net_;
    InputLayout layout_;
};

class MdqrModel : public IntensityModel {
public:
    MdqrModel(Mlp intensity, std::shared_ptr<const SizeModel> sizes);
    std::string kind() const override { return "mdqr"; }
    void intensities(const StateVector& s, Intensities& out) const override;
    std::int64_t sample_size(EventType type, int level, const StateVector& s, Rng& rng) const override;
    ordered_json to_json() const override;

    const Mlp& net() const { return net_; }
    const SizeModel& size_model() const { return *sizes_; }
    std::string size_model_file = "size_model.json";

private:
    Mlp net_;
    std::shared_ptr<const SizeModel> sizes_;
    InputLayout layout_;
};

/// Fixed rates regardless of the state; unit sizes.
class FrozenModel : public IntensityModel {
public:
    explicit FrozenModel(Intensities rates) : rates_(rates) {}
    std::string kind() const override { return "frozen"; }
    void intensities(const StateVector&, Intensities& out) const override { out = rates_; }
    std::int64_t sample_size(EventType, int, const StateVector&, Rng&) const override { return 1; }
    ordered_json to_json() const override;

private:
    Intensities rates_;
};

/// The generator's own law, as a model.
class SyntheticTruthModel : public IntensityModel {
public:
    explicit SyntheticTruthModel(SyntheticSpec spec);
    std::string kind() const override { return "synthetic"; }
    void intensities(const StateVector& s, Intensities& out) const override;
    std::int64_t sample_size(EventType type, int level, const StateVector& s, Rng& rng) const override;
    ordered_json to_json() const override;
    const SyntheticSpec& spec() const { return spec_; }

private:
    SyntheticSpec spec_;
};

ordered_json queue_init_to_json(const QueueInitSampler& q);
QueueInitSampler queue_init_from_json(const json& j);
ordered_json aes_to_json(const AesTable& aes);
AesTable aes_from_json(const json& j);

/// Writes a model document (and, for mdqr, the size model next to it).
void save_model(const IntensityModel& model, const std::string& path);
/// Throws FormatError / VersionMismatch.
std::unique_ptr<IntensityModel> load_model(const std::string& path);
std::unique_ptr<IntensityModel> model_from_json(const json& j, const std::string& base_dir = ".");

/// Table models fitted on the whole log (tables per depth unless pooled).
std::unique_ptr<QrModel> fit_qr(const std::vector<EventRecord>& records, bool pool_depths = false);
std::unique_ptr<SaqrModel> fit_saqr(const std::vector<EventRecord>& records, bool pool_depths = false);

struct NeuralOptions {
    TrainConfig train;
    std::vector<int> hidden;  // empty: the family default
    std::uint64_t init_seed = 1;
    DatasetOptions data;
};

struct TrainedNet {
    Mlp net;
    TrainHistory history;
    std::size_t train_samples = 0;
    std::size_t validation_samples = 0;
    std::size_t clipped = 0;
};

/// DQR: widths [128, 32], 3 ReLU outputs, NLL on per-queue intervals.
TrainedNet train_dqr(const DatasetSplit& data, const NeuralOptions& opts);
/// MDQR intensities: widths [256, 64], 30 ReLU outputs, NLL on book-wide intervals.
TrainedNet train_mdqr(const DatasetSplit& data, const NeuralOptions& opts);
/// MDQR sizes: widths [256, 64], 200-way softmax, cross-entropy.
TrainedNet train_size(const DatasetSplit& data, const NeuralOptions& opts);

}  // namespace lobqr
