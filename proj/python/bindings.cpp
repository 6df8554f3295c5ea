#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "ctphish/classifiers/model.hpp"
#include "ctphish/cli/cli.hpp"
#include "ctphish/errors.hpp"
#include "ctphish/features/extractor.hpp"
#include "ctphish/features/lexical.hpp"
#include "ctphish/evaluate/metrics.hpp"

namespace py = pybind11;
using namespace ctphish;

namespace {

Bytes to_bytes(const py::bytes& b) {
    std::string s = b;
    return Bytes(s.begin(), s.end());
}

py::dict domain_dict(const cert::DomainName& d) {
    py::dict out;
    out["full"] = d.full;
    out["labels"] = d.labels;
    out["public_suffix"] = d.public_suffix;
    out["registered_domain"] = d.registered_domain;
    out["core"] = d.core;
    out["is_wildcard"] = d.is_wildcard;
    out["is_idn"] = d.is_idn;
    out["is_ip"] = d.is_ip;
    out["has_valid_tld"] = d.has_valid_tld;
    return out;
}

evaluate::ScoredSet scored_set(const std::vector<double>& scores, const std::vector<std::string>& labels) {
    if (scores.size() != labels.size()) throw py::value_error("scores and labels differ in length");
    evaluate::ScoredSet s;
    for (std::size_t i = 0; i < scores.size(); ++i) s.add(scores[i], evaluate::item_label_from_string(labels[i]));
    return s;
}

std::vector<std::vector<double>> vectors_of(const std::vector<features::FeatureVector>& vs) {
    std::vector<std::vector<double>> out;
    for (const auto& v : vs) out.push_back(v.values);
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Native bindings for the ctphish library";

    py::register_exception<Error>(m, "Error");

    m.def("decompose_domain", [](const std::string& name) { return domain_dict(cert::decompose_domain(name)); });
    m.def("parse_der_json", [](const py::bytes& der) { return Json(cert::parse_der(to_bytes(der))).dump(); },
          "Parse a DER certificate into its record as a JSON string");
    m.def("pem_to_der", [](const std::string& pem) {
        std::vector<py::bytes> out;
        for (const auto& d : cert::pem_bundle_to_der(pem))
            out.emplace_back(reinterpret_cast<const char*>(d.data()), d.size());
        return out;
    });

    m.def("feature_names", [](const std::string& set) {
        const auto& all = features::feature_names();
        if (features::feature_set_from_string(set) == features::FeatureSet::all) return all;
        std::vector<std::string> out;
        for (auto i : features::selected_indices()) out.push_back(all[i]);
        return out;
    }, py::arg("set") = "all");
    m.def("features", [](const py::bytes& der, const std::string& set, const std::string& mode) {
        auto r = cert::parse_der(to_bytes(der));
        features::FeatureExtractor ex(features::CategoricalCodec::fit(std::span(&r, 1)));
        auto fs = features::feature_set_from_string(set);
        if (classifiers::mode_from_string(mode) == classifiers::Mode::cert) return vectors_of({ex.cert_vector(r, fs)});
        return vectors_of(ex.per_domain(r, fs));
    }, py::arg("der"), py::arg("set") = "all", py::arg("mode") = "domain");
    m.def("shannon_entropy", [](const std::string& s) { return features::shannon_entropy(s); });
    m.def("ngram_stats", [](const std::string& s, std::size_t n) {
        auto st = features::ngram_stats(s, n);
        py::dict d;
        d["std"] = st.std;
        d["median"] = st.median;
        d["mean"] = st.mean;
        d["min"] = st.min;
        d["max"] = st.max;
        d["bottom_quartile"] = st.bottom_quartile;
        d["top_quartile"] = st.top_quartile;
        return d;
    });

    m.def("combine_meta", [](const std::vector<double>& scores, const std::string& meta) {
        return classifiers::combine_meta(scores, classifiers::meta_from_string(meta));
    });
    m.def("roc", [](const std::vector<double>& scores, const std::vector<std::string>& labels) {
        std::vector<std::tuple<double, double, double>> out;
        for (const auto& p : evaluate::roc(scored_set(scores, labels))) out.emplace_back(p.fpr, p.tpr, p.threshold);
        return out;
    }, "ROC points as (fpr, tpr, threshold); labels are phish, benign or unknown");
    m.def("threshold_at_fpr", [](const std::vector<double>& scores, const std::vector<std::string>& labels,
                                 double target) { return evaluate::threshold_at_fpr(scored_set(scores, labels), target); });

    py::class_<classifiers::TrainedModel>(m, "Model")
        .def_static("load", &classifiers::TrainedModel::load)
        .def_static("default_rules", [] { return classifiers::TrainedModel::from_rules(classifiers::RuleSet::bundled()); })
        .def_property_readonly("name", &classifiers::TrainedModel::name)
        .def("score_der", [](const classifiers::TrainedModel& model, const py::bytes& der) {
            auto d = model.score_record(cert::parse_der(to_bytes(der)));
            return std::make_pair(d.score, d.domain_scores);
        });

    m.def("run_cli", [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code;
        {
            py::gil_scoped_release release;
            code = cli::run(args, out, err);
        }
        return std::make_tuple(code, out.str(), err.str());
    }, "Run a ctphish subcommand in-process; returns (exit code, stdout, stderr)");
}
