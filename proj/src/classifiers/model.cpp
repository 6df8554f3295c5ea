#include "ctphish/classifiers/model.hpp"

#include <algorithm>
#include <map>
#include <mutex>

#include "ctphish/data.hpp"
#include "ctphish/errors.hpp"

namespace ctphish::classifiers {

using features::FeatureSet;

std::string_view to_string(ModelKind k) { return k == ModelKind::forest ? "forest" : "rules"; }
std::string_view to_string(Mode m) { return m == Mode::cert ? "cert" : "domain"; }

std::string_view to_string(Meta m) {
    switch (m) {
        case Meta::min: return "min";
        case Meta::max: return "max";
        case Meta::avg: return "avg";
        case Meta::med: return "med";
        case Meta::none: return "n/a";
    }
    return "n/a";
}

ModelKind model_kind_from_string(std::string_view s) {
    if (s == "forest") return ModelKind::forest;
    if (s == "rules") return ModelKind::rules;
    throw std::invalid_argument("unknown model kind: " + std::string(s));
}

Mode mode_from_string(std::string_view s) {
    if (s == "domain" || s == "per_domain") return Mode::per_domain;
    if (s == "cert") return Mode::cert;
    throw std::invalid_argument("unknown mode: " + std::string(s));
}

Meta meta_from_string(std::string_view s) {
    if (s == "min") return Meta::min;
    if (s == "max") return Meta::max;
    if (s == "avg") return Meta::avg;
    if (s == "med") return Meta::med;
    if (s == "n/a" || s == "none") return Meta::none;
    throw std::invalid_argument("unknown meta classifier: " + std::string(s));
}

double combine_meta(std::span<const double> scores, Meta meta) {
    if (scores.empty()) throw EmptyInput("combine_meta needs at least one score");
    switch (meta) {
        case Meta::min: return *std::min_element(scores.begin(), scores.end());
        case Meta::max: return *std::max_element(scores.begin(), scores.end());
        case Meta::avg: {
            std::vector<double> sorted(scores.begin(), scores.end());
            std::sort(sorted.begin(), sorted.end());
            double sum = 0;
            for (double s : sorted) sum += s;
            double mean = sum / static_cast<double>(sorted.size());
            return std::clamp(mean, sorted.front(), sorted.back());
        }
        case Meta::med:
        case Meta::none: {
            if (meta == Meta::none && scores.size() != 1) throw std::invalid_argument("meta n/a needs exactly one score");
            std::vector<double> sorted(scores.begin(), scores.end());
            std::sort(sorted.begin(), sorted.end());
            std::size_t n = sorted.size();
            if (n % 2 == 1) return sorted[n / 2];
            return sorted[n / 2 - 1] + (sorted[n / 2] - sorted[n / 2 - 1]) / 2.0;
        }
    }
    return 0.0;
}

// ---------------------------------------------------------------------------
// plugin registry

namespace {

std::mutex& registry_mutex() {
    static std::mutex m;
    return m;
}

std::map<std::string, ScorerFactory>& registry() {
    static std::map<std::string, ScorerFactory> r;
    return r;
}

Json manifest_json(const TrainManifest& m) {
    return Json{{"dataset_hash", m.dataset_hash}, {"seed", m.seed},           {"timestamp", m.timestamp},
                {"n_trees", m.n_trees},           {"n_samples", m.n_samples}, {"n_benign", m.n_benign},
                {"n_phish", m.n_phish}};
}

TrainManifest manifest_from(const Json& j) {
    TrainManifest m;
    m.dataset_hash = j.value("dataset_hash", "");
    m.seed = j.value("seed", std::uint64_t{0});
    m.timestamp = j.value("timestamp", "");
    m.n_trees = j.value("n_trees", std::size_t{0});
    m.n_samples = j.value("n_samples", std::size_t{0});
    m.n_benign = j.value("n_benign", std::size_t{0});
    m.n_phish = j.value("n_phish", std::size_t{0});
    return m;
}

}  // namespace

void register_scorer(const std::string& kind, ScorerFactory factory) {
    if (kind == "forest" || kind == "rules") throw std::invalid_argument("cannot override built-in kind " + kind);
    std::lock_guard lock(registry_mutex());
    registry()[kind] = std::move(factory);
}

// ---------------------------------------------------------------------------
// model

TrainedModel TrainedModel::from_forest(RandomForest forest, FeatureSet set, Mode mode, Meta meta,
                                       features::CategoricalCodec codec, TrainManifest manifest) {
    if (forest.empty()) throw UntrainedModel("forest has no trees");
    if (forest.n_features() != features::dimension(set)) {
        throw DimensionMismatch("forest dimension does not match feature set");
    }
    if (mode == Mode::cert) meta = Meta::none;
    if (mode == Mode::per_domain && meta == Meta::none) throw std::invalid_argument("per-domain model needs a meta");
    TrainedModel m;
    m.kind_ = ModelKind::forest;
    m.feature_set_ = set;
    m.mode_ = mode;
    m.meta_ = meta;
    m.forest_ = std::move(forest);
    m.extractor_ = features::FeatureExtractor(std::move(codec));
    m.manifest_ = std::move(manifest);
    return m;
}

TrainedModel TrainedModel::from_rules(RuleSet rules) {
    rules.validate();
    TrainedModel m;
    m.kind_ = ModelKind::rules;
    m.mode_ = Mode::cert;
    m.meta_ = Meta::none;
    m.rules_ = std::move(rules);
    return m;
}

const RandomForest& TrainedModel::forest() const {
    if (!forest_) throw UntrainedModel("model has no forest");
    return *forest_;
}

const RuleSet& TrainedModel::rules() const {
    if (!rules_) throw std::logic_error("model is not a rule set");
    return *rules_;
}

double TrainedModel::score(const features::FeatureVector& v) const {
    if (!forest_) throw UntrainedModel("model has no forest");
    if (v.feature_set != feature_set_) throw DimensionMismatch("vector feature set differs from model");
    return forest_->score(v.values);
}

ScoreDetail TrainedModel::score_record(const cert::CertificateRecord& r) const {
    ScoreDetail out;
    if (kind_ == ModelKind::rules) {
        out.score = score_rules(r, *rules_);
        return out;
    }
    if (mode_ == Mode::cert) {
        out.score = score(extractor_.cert_vector(r, feature_set_));
        return out;
    }
    for (const auto& v : extractor_.per_domain(r, feature_set_)) out.domain_scores.push_back(score(v));
    out.score = combine_meta(out.domain_scores, meta_);
    return out;
}

std::string TrainedModel::name() const {
    if (kind_ == ModelKind::rules) return "rules";
    std::string n = "RF_" + std::string(features::to_string(feature_set_));
    if (mode_ == Mode::cert) return n + "-cert";
    return n + "-" + std::string(to_string(meta_));
}

Json TrainedModel::to_json() const {
    Json j{{"format", "ctphish-model"}, {"version", 1}, {"kind", to_string(kind_)}, {"name", name()}};
    if (kind_ == ModelKind::rules) {
        j["rules"] = rules_->to_json();
        return j;
    }
    j["feature_set"] = features::to_string(feature_set_);
    j["mode"] = to_string(mode_);
    j["meta"] = to_string(meta_);
    Json names = Json::array();
    for (auto i : features::indices_of(feature_set_)) names.push_back(features::feature_names()[i]);
    j["feature_names"] = names;
    j["codec"] = extractor_.codec().to_json();
    j["manifest"] = manifest_json(manifest_);
    j["forest"] = forest_->to_json();
    return j;
}

TrainedModel TrainedModel::from_json(const Json& j) {
    try {
        if (j.value("format", "") != "ctphish-model") throw ModelFormatError("not a ctphish model");
        if (j.value("version", 0) != 1) throw ModelFormatError("unsupported model version");
        auto kind = model_kind_from_string(j.at("kind").get<std::string>());
        if (kind == ModelKind::rules) return from_rules(RuleSet::from_json(j.at("rules")));
        auto set = features::feature_set_from_string(j.at("feature_set").get<std::string>());
        Json expected = Json::array();
        for (auto i : features::indices_of(set)) expected.push_back(features::feature_names()[i]);
        if (j.at("feature_names") != expected) throw ModelFormatError("model feature layout differs from catalog");
        return from_forest(RandomForest::from_json(j.at("forest")), set,
                           mode_from_string(j.at("mode").get<std::string>()),
                           meta_from_string(j.at("meta").get<std::string>()),
                           features::CategoricalCodec::from_json(j.at("codec")), manifest_from(j.at("manifest")));
    } catch (const Json::exception& e) {
        throw ModelFormatError(std::string("model file: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ModelFormatError(std::string("model file: ") + e.what());
    } catch (const DimensionMismatch& e) {
        throw ModelFormatError(std::string("model file: ") + e.what());
    }
}

void TrainedModel::save(const std::string& path) const { data::write_file_atomic(path, to_json().dump() + "\n"); }

TrainedModel TrainedModel::load(const std::string& path) {
    Json j;
    try {
        j = Json::parse(data::read_file(path));
    } catch (const Json::exception& e) {
        throw ModelFormatError(path + ": " + e.what());
    }
    return from_json(j);
}

std::unique_ptr<Scorer> load_scorer(const std::string& path) {
    Json j;
    try {
        j = Json::parse(data::read_file(path));
    } catch (const Json::exception& e) {
        throw ModelFormatError(path + ": " + e.what());
    }
    std::string kind = j.value("kind", "");
    if (kind == "forest" || kind == "rules") return std::make_unique<TrainedModel>(TrainedModel::from_json(j));
    ScorerFactory factory;
    {
        std::lock_guard lock(registry_mutex());
        auto it = registry().find(kind);
        if (it == registry().end()) throw ModelFormatError("no scorer registered for kind '" + kind + "'");
        factory = it->second;
    }
    return factory(j);
}

// ---------------------------------------------------------------------------
// training

TrainingData training_data(const dataset::LabeledDataset& d, const features::FeatureExtractor& ex, FeatureSet set,
                           Mode mode) {
    TrainingData t;
    t.x.cols = features::dimension(set);
    for (const auto& lr : d.records) {
        int label = lr.label == dataset::Label::phish ? 1 : 0;
        if (mode == Mode::cert) {
            t.x.push_row(ex.cert_vector(lr.record, set).values);
            t.y.push_back(label);
            continue;
        }
        for (const auto& v : ex.per_domain(lr.record, set)) {
            t.x.push_row(v.values);
            t.y.push_back(label);
        }
    }
    return t;
}

TrainedModel train_forest(const dataset::LabeledDataset& d, const TrainOptions& options) {
    if (d.count(dataset::Label::phish) == 0 || d.count(dataset::Label::benign) == 0) {
        throw EmptyClass("dataset needs certificates of both labels");
    }
    d.validate();
    std::vector<cert::CertificateRecord> records;
    records.reserve(d.records.size());
    for (const auto& lr : d.records) records.push_back(lr.record);
    auto codec = features::CategoricalCodec::fit(records);
    features::FeatureExtractor ex(codec);
    auto data = training_data(d, ex, options.feature_set, options.mode);

    ForestParams params;
    params.n_trees = options.n_trees;
    params.seed = options.seed;
    params.threads = options.threads;
    auto forest = RandomForest::train(data.x, data.y, params);

    TrainManifest manifest;
    manifest.dataset_hash = dataset_hash(d);
    manifest.seed = options.seed;
    manifest.timestamp = format_rfc3339(options.timestamp.value_or(d.created_at));
    manifest.n_trees = options.n_trees;
    manifest.n_samples = data.x.rows;
    manifest.n_benign = d.count(dataset::Label::benign);
    manifest.n_phish = d.count(dataset::Label::phish);
    return TrainedModel::from_forest(std::move(forest), options.feature_set, options.mode, options.meta,
                                     std::move(codec), std::move(manifest));
}

// ---------------------------------------------------------------------------
// selection

std::vector<MdiEntry> mdi_ranking(const TrainedModel& m) {
    if (m.kind() != ModelKind::forest) throw UntrainedModel("MDI needs a trained forest");
    if (m.feature_set() != FeatureSet::all) throw DimensionMismatch("MDI selection needs an all-features forest");
    auto imp = m.forest().feature_importances();
    const auto& cat = features::catalog();
    std::vector<MdiEntry> out;
    for (std::size_t i = 0; i < imp.size(); ++i) {
        if (cat[i].category == features::Category::keyword) continue;
        out.push_back({i, cat[i].name, imp[i]});
    }
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.importance > b.importance; });
    return out;
}

std::vector<std::size_t> mdi_selection(const TrainedModel& m, std::size_t k) {
    auto ranked = mdi_ranking(m);
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < std::min(k, ranked.size()); ++i) out.push_back(ranked[i].index);
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::size_t> mdi_selection_above(const TrainedModel& m, double min_importance) {
    std::vector<std::size_t> out;
    for (const auto& e : mdi_ranking(m)) {
        if (e.importance >= min_importance) out.push_back(e.index);
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace ctphish::classifiers
