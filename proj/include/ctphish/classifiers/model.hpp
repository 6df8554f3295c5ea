#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ctphish/cert/certificate.hpp"
#include "ctphish/classifiers/forest.hpp"
#include "ctphish/classifiers/rules.hpp"
#include "ctphish/dataset/labeled.hpp"
#include "ctphish/features/extractor.hpp"

namespace ctphish::classifiers {

enum class ModelKind { forest, rules };
/// per_domain: one sample per (certificate, domain); cert: one averaged vector per certificate.
enum class Mode { per_domain, cert };
enum class Meta { min, max, avg, med, none };

std::string_view to_string(ModelKind k);
std::string_view to_string(Mode m);
std::string_view to_string(Meta m);
ModelKind model_kind_from_string(std::string_view s);
Mode mode_from_string(std::string_view s);  ///< "domain", "per_domain" or "cert"
Meta meta_from_string(std::string_view s);  ///< "min", "max", "avg", "med", "n/a"

/// Aggregates per-domain scores. Median of an even count averages the two
/// central values. Throws EmptyInput.
double combine_meta(std::span<const double> scores, Meta meta);

struct TrainManifest {
    std::string dataset_hash;
    std::uint64_t seed = 0;
    std::string timestamp;  ///< RFC 3339
    std::size_t n_trees = 0;
    std::size_t n_samples = 0;
    std::size_t n_benign = 0;  ///< certificates
    std::size_t n_phish = 0;

    bool operator==(const TrainManifest&) const = default;
};

struct ScoreDetail {
    double score = 0.0;
    std::vector<double> domain_scores;  ///< per_domain models only, in record.domains() order
};

/// Anything that maps a certificate to a score in [0, 1]. External scorers
/// (for example a sequence model) register a factory under their model kind.
class Scorer {
public:
    virtual ~Scorer() = default;
    virtual std::string name() const = 0;
    virtual ScoreDetail score_record(const cert::CertificateRecord& r) const = 0;
};

using ScorerFactory = std::function<std::unique_ptr<Scorer>(const Json& model)>;
void register_scorer(const std::string& kind, ScorerFactory factory);

class TrainedModel : public Scorer {
public:
    static TrainedModel from_forest(RandomForest forest, features::FeatureSet set, Mode mode, Meta meta,
                                    features::CategoricalCodec codec, TrainManifest manifest);
    static TrainedModel from_rules(RuleSet rules);

    ModelKind kind() const { return kind_; }
    features::FeatureSet feature_set() const { return feature_set_; }
    Mode mode() const { return mode_; }
    Meta meta() const { return meta_; }
    const RandomForest& forest() const;
    const RuleSet& rules() const;
    const features::CategoricalCodec& codec() const { return extractor_.codec(); }
    const features::FeatureExtractor& extractor() const { return extractor_; }
    const TrainManifest& manifest() const { return manifest_; }

    /// Forest score of one vector. Throws DimensionMismatch, UntrainedModel.
    double score(const features::FeatureVector& v) const;
    ScoreDetail score_record(const cert::CertificateRecord& r) const override;
    std::string name() const override;

    Json to_json() const;
    static TrainedModel from_json(const Json& j);
    void save(const std::string& path) const;
    static TrainedModel load(const std::string& path);

private:
    TrainedModel() : extractor_(features::CategoricalCodec{}) {}

    ModelKind kind_ = ModelKind::rules;
    features::FeatureSet feature_set_ = features::FeatureSet::all;
    Mode mode_ = Mode::cert;
    Meta meta_ = Meta::none;
    std::optional<RandomForest> forest_;
    std::optional<RuleSet> rules_;
    features::FeatureExtractor extractor_;
    TrainManifest manifest_;
};

/// Loads a model file; built-in kinds give a TrainedModel, other kinds go
/// through the registered factories. Throws ModelFormatError.
std::unique_ptr<Scorer> load_scorer(const std::string& path);

struct TrainOptions {
    features::FeatureSet feature_set = features::FeatureSet::all;
    Mode mode = Mode::per_domain;
    Meta meta = Meta::max;  ///< ignored for Mode::cert
    std::size_t n_trees = 200;
    std::uint64_t seed = 0;
    std::size_t threads = 0;
    std::optional<UtcTime> timestamp;  ///< defaults to the dataset's created_at
};

/// Training matrix of a dataset: rows follow the records, and in per_domain
/// mode each domain of a record is one row carrying the record's label.
struct TrainingData {
    Matrix x;
    std::vector<int> y;
};
TrainingData training_data(const dataset::LabeledDataset& d, const features::FeatureExtractor& ex,
                           features::FeatureSet set, Mode mode);

/// Throws EmptyClass, DimensionMismatch.
TrainedModel train_forest(const dataset::LabeledDataset& d, const TrainOptions& options);

struct MdiEntry {
    std::size_t index;  ///< catalog index
    std::string name;
    double importance;
};

/// Non-keyword features of an all-features forest by decreasing MDI (ties by
/// catalog index). Throws UntrainedModel, DimensionMismatch.
std::vector<MdiEntry> mdi_ranking(const TrainedModel& m);
/// Catalog indices (ascending) of the k highest-ranked features.
std::vector<std::size_t> mdi_selection(const TrainedModel& m, std::size_t k);
/// Catalog indices (ascending) of features with MDI >= min_importance.
std::vector<std::size_t> mdi_selection_above(const TrainedModel& m, double min_importance);

}  // namespace ctphish::classifiers
