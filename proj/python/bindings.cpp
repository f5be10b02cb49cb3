#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "ddi/checkpoint.hpp"
#include "ddi/cli.hpp"
#include "ddi/corpus.hpp"
#include "ddi/evaluation.hpp"
#include "ddi/filtering.hpp"
#include "ddi/training.hpp"

namespace py = pybind11;
using nlohmann::json;

namespace {

// Structured values cross the boundary as JSON text; the Python package
// decodes them.

std::vector<ddi::RawInstance> instances_from(const std::string& text) {
    std::vector<ddi::RawInstance> out;
    for (const auto& j : json::parse(text)) out.push_back(ddi::raw_instance_from_json(j));
    return out;
}

std::string instances_to(const std::vector<ddi::RawInstance>& v) {
    json arr = json::array();
    for (const auto& i : v) arr.push_back(ddi::to_json(i));
    return arr.dump();
}

std::vector<ddi::Label> labels_from(const std::vector<std::string>& names) {
    std::vector<ddi::Label> out;
    out.reserve(names.size());
    for (const auto& n : names) out.push_back(ddi::parse_label(n));
    return out;
}

class Model {
public:
    explicit Model(const std::string& dir) : ck_(ddi::load_checkpoint<float>(dir)) {}

    std::string config() const { return ddi::to_json(ck_.config).dump(); }
    std::size_t vocabulary_size() const { return ck_.vocab.size(); }

    std::string predict(const std::string& instances, std::size_t threads) const {
        const auto raw = instances_from(instances);
        ddi::PositionVocab pv(ck_.config.position_radius);
        std::vector<ddi::InstanceFeatures> data;
        for (const auto& r : raw) data.push_back(ddi::featurize(r.tokens, r.drug_a, r.drug_b, r.label, ck_.vocab, pv));
        std::vector<ddi::Prediction<float>> preds;
        {
            py::gil_scoped_release release;
            preds = ddi::predict_all(ck_.params, ck_.config, data, threads);
        }
        json out = json::array();
        for (std::size_t i = 0; i < raw.size(); ++i) {
            out.push_back({{"pair", raw[i].provenance.pair},
                           {"label", std::string(ddi::label_name(preds[i].label))},
                           {"probs", std::vector<double>(preds[i].probs.begin(), preds[i].probs.end())},
                           {"alpha", std::vector<double>(preds[i].alpha.begin(), preds[i].alpha.end())}});
        }
        return out.dump();
    }

private:
    ddi::Checkpoint<float> ck_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Bi-LSTM drug-drug interaction classifiers";

    py::register_exception<ddi::CorpusError>(m, "CorpusError", PyExc_ValueError);

    m.def("tokenize", [](const std::string& text) { return ddi::tokenize_normalize(text); }, py::arg("text"));

    m.def("preprocess",
          [](const std::string& path) { return instances_to(ddi::generate_instances(ddi::parse_corpus(path))); },
          py::arg("path"));
    m.def("preprocess_xml",
          [](const std::string& xml) { return instances_to(ddi::generate_instances(ddi::parse_corpus_xml(xml))); },
          py::arg("xml"));

    m.def(
        "apply_filters",
        [](const std::string& instances, const std::string& mode, const std::string& config) {
            auto cfg = config.empty() ? ddi::FilterConfig{} : ddi::filter_config_from_json(json::parse(config));
            auto report = ddi::apply_filters(instances_from(instances), ddi::parse_filter_mode(mode), cfg);
            return ddi::to_json(report).dump();
        },
        py::arg("instances"), py::arg("mode"), py::arg("config") = "");

    m.def(
        "evaluate",
        [](const std::vector<std::string>& gold, const std::vector<std::string>& predicted,
           const std::vector<std::string>& reinserted) {
            return ddi::to_json(ddi::evaluate(labels_from(gold), labels_from(predicted), labels_from(reinserted)))
                .dump();
        },
        py::arg("gold"), py::arg("predicted"), py::arg("reinserted") = std::vector<std::string>{});

    m.def(
        "mcnemar", [](std::size_t b, std::size_t c) { return ddi::to_json(ddi::mcnemar(b, c)).dump(); },
        py::arg("b"), py::arg("c"));

    m.def(
        "run_cli",
        [](const std::vector<std::string>& args) {
            std::ostringstream out, err;
            int status;
            {
                py::gil_scoped_release release;
                status = ddi::cli::dispatch(args, out, err);
            }
            return py::make_tuple(status, out.str(), err.str());
        },
        py::arg("args"));

    py::class_<Model>(m, "Model")
        .def(py::init<const std::string&>(), py::arg("checkpoint"))
        .def("config_json", &Model::config)
        .def_property_readonly("vocabulary_size", &Model::vocabulary_size)
        .def("predict_json", &Model::predict, py::arg("instances"), py::arg("threads") = 1);
}
