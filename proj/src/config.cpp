#include "uotflow/config.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "uotflow/ioutil.hpp"

namespace uotflow::config {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error("config: " + msg); }

void expect_keys(const json& j, const std::string& where, const std::set<std::string>& allowed) {
    if (!j.is_object()) fail(where + " must be an object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key())) fail("unknown key '" + it.key() + "' in " + where);
}

datasets::GmmSpec parse_spec(const json& j) {
    expect_keys(j, "dataset.spec", {"modes", "weights", "d"});
    datasets::GmmSpec spec;
    spec.d = j.at("d").get<std::size_t>();
    for (const json& m : j.at("modes")) {
        expect_keys(m, "dataset.spec.modes[]", {"mean", "sigma"});
        datasets::Mode mode;
        mode.mean = m.at("mean").get<std::vector<double>>();
        mode.sigma = m.at("sigma").get<double>();
        spec.modes.push_back(std::move(mode));
    }
    spec.weights = j.at("weights").get<std::vector<double>>();
    spec.validate();
    return spec;
}

void parse_dataset(const json& j, DatasetConfig& out) {
    expect_keys(j, "dataset", {"preset", "spec", "n_train", "n_test"});
    if (j.contains("preset") == j.contains("spec"))
        fail("dataset needs exactly one of 'preset' or 'spec'");
    if (j.contains("preset")) {
        out.preset = j.at("preset").get<std::string>();
        out.spec = datasets::preset(out.preset);
    } else {
        out.spec = parse_spec(j.at("spec"));
    }
    if (j.contains("n_train")) out.n_train = j.at("n_train").get<std::size_t>();
    if (j.contains("n_test")) out.n_test = j.at("n_test").get<std::size_t>();
}

void parse_uot(const json& j, transport::UotConfig& out) {
    expect_keys(j, "train.uot", {"eps", "tau", "source_fixed", "max_iter", "tol", "accelerate"});
    if (j.contains("eps")) out.eps = j.at("eps").get<double>();
    if (j.contains("tau")) out.tau = j.at("tau").get<double>();
    if (j.contains("source_fixed")) out.source_fixed = j.at("source_fixed").get<bool>();
    if (j.contains("max_iter")) out.max_iter = j.at("max_iter").get<std::size_t>();
    if (j.contains("tol")) out.tol = j.at("tol").get<double>();
    if (j.contains("accelerate")) out.accelerate = j.at("accelerate").get<bool>();
    out.validate();
}

void parse_train(const json& j, flowmatch::TrainConfig& out) {
    expect_keys(j, "train",
                {"coupling", "k", "sigma", "batch_size", "iterations", "uot", "lr", "warmup",
                 "clip", "score_clamp", "renormalize_weights", "hidden"});
    if (j.contains("coupling"))
        out.coupling = flowmatch::parse_coupling(j.at("coupling").get<std::string>());
    if (j.contains("k")) out.k = j.at("k").get<double>();
    if (j.contains("sigma")) out.sigma = j.at("sigma").get<double>();
    if (j.contains("batch_size")) out.batch_size = j.at("batch_size").get<std::size_t>();
    if (j.contains("iterations")) out.iterations = j.at("iterations").get<std::size_t>();
    if (j.contains("uot")) parse_uot(j.at("uot"), out.uot);
    if (j.contains("lr")) out.lr = j.at("lr").get<double>();
    if (j.contains("warmup")) out.warmup = j.at("warmup").get<std::size_t>();
    if (j.contains("clip")) out.clip = j.at("clip").get<double>();
    if (j.contains("score_clamp")) out.score_clamp = j.at("score_clamp").get<double>();
    if (j.contains("renormalize_weights"))
        out.renormalize_weights = j.at("renormalize_weights").get<bool>();
    if (j.contains("hidden")) out.hidden = j.at("hidden").get<std::vector<std::size_t>>();
    if (out.coupling != flowmatch::Coupling::uot_rfm && out.k != 0.0) out.k = 0.0;
    out.validate();
}

void parse_solver(const json& j, ode::SolverConfig& out) {
    expect_keys(j, "solver", {"method", "n_steps", "atol", "rtol", "max_steps"});
    if (j.contains("method")) out.method = ode::parse_method(j.at("method").get<std::string>());
    if (j.contains("n_steps")) out.n_steps = j.at("n_steps").get<std::size_t>();
    if (j.contains("atol")) out.atol = j.at("atol").get<double>();
    if (j.contains("rtol")) out.rtol = j.at("rtol").get<double>();
    if (j.contains("max_steps")) out.max_steps = j.at("max_steps").get<std::size_t>();
    out.validate();
}

void parse_eval(const json& j, EvalConfig& out) {
    expect_keys(j, "eval", {"n_gen", "n_real", "knn_k", "n_nll", "do_ncre", "do_prf", "do_bpd"});
    if (j.contains("n_gen")) out.n_gen = j.at("n_gen").get<std::size_t>();
    if (j.contains("n_real")) out.n_real = j.at("n_real").get<std::size_t>();
    if (j.contains("knn_k")) out.knn_k = j.at("knn_k").get<std::size_t>();
    if (j.contains("n_nll")) out.n_nll = j.at("n_nll").get<std::size_t>();
    if (j.contains("do_ncre")) out.do_ncre = j.at("do_ncre").get<bool>();
    if (j.contains("do_prf")) out.do_prf = j.at("do_prf").get<bool>();
    if (j.contains("do_bpd")) out.do_bpd = j.at("do_bpd").get<bool>();
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        fail(std::string("invalid JSON: ") + e.what());
    }
    expect_keys(j, "config root",
                {"version", "dataset", "train", "solver", "eval", "output_dir", "seed"});
    ExperimentConfig cfg;
    if (j.contains("version")) cfg.version = j.at("version").get<int>();
    if (cfg.version != 1) fail("unsupported config version");
    if (!j.contains("dataset")) fail("missing 'dataset'");
    parse_dataset(j.at("dataset"), cfg.dataset);
    if (j.contains("train")) parse_train(j.at("train"), cfg.train);
    if (j.contains("solver")) parse_solver(j.at("solver"), cfg.solver);
    if (j.contains("eval")) parse_eval(j.at("eval"), cfg.eval);
    if (j.contains("output_dir")) cfg.output_dir = j.at("output_dir").get<std::string>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string dump_config(const ExperimentConfig& cfg) {
    json j;
    j["version"] = cfg.version;
    if (!cfg.dataset.preset.empty()) {
        j["dataset"]["preset"] = cfg.dataset.preset;
    } else {
        json spec;
        spec["d"] = cfg.dataset.spec.d;
        for (const auto& m : cfg.dataset.spec.modes)
            spec["modes"].push_back({{"mean", m.mean}, {"sigma", m.sigma}});
        spec["weights"] = cfg.dataset.spec.weights;
        j["dataset"]["spec"] = spec;
    }
    j["dataset"]["n_train"] = cfg.dataset.n_train;
    j["dataset"]["n_test"] = cfg.dataset.n_test;
    j["train"] = {{"coupling", flowmatch::coupling_name(cfg.train.coupling)},
                  {"k", cfg.train.k},
                  {"sigma", cfg.train.sigma},
                  {"batch_size", cfg.train.batch_size},
                  {"iterations", cfg.train.iterations},
                  {"uot",
                   {{"eps", cfg.train.uot.eps},
                    {"tau", cfg.train.uot.tau},
                    {"source_fixed", cfg.train.uot.source_fixed},
                    {"max_iter", cfg.train.uot.max_iter},
                    {"tol", cfg.train.uot.tol},
                    {"accelerate", cfg.train.uot.accelerate}}},
                  {"lr", cfg.train.lr},
                  {"warmup", cfg.train.warmup},
                  {"clip", cfg.train.clip},
                  {"score_clamp", cfg.train.score_clamp},
                  {"renormalize_weights", cfg.train.renormalize_weights},
                  {"hidden", cfg.train.hidden}};
    j["solver"] = {{"method", ode::method_name(cfg.solver.method)},
                   {"n_steps", cfg.solver.n_steps},
                   {"atol", cfg.solver.atol},
                   {"rtol", cfg.solver.rtol},
                   {"max_steps", cfg.solver.max_steps}};
    j["eval"] = {{"n_gen", cfg.eval.n_gen},     {"n_real", cfg.eval.n_real},
                 {"knn_k", cfg.eval.knn_k},     {"n_nll", cfg.eval.n_nll},
                 {"do_ncre", cfg.eval.do_ncre}, {"do_prf", cfg.eval.do_prf},
                 {"do_bpd", cfg.eval.do_bpd}};
    j["output_dir"] = cfg.output_dir;
    j["seed"] = cfg.seed;
    return j.dump(2);
}

void apply_overrides(ExperimentConfig& cfg, std::optional<std::uint64_t> seed,
                     const std::optional<std::string>& out_dir) {
    if (seed) cfg.seed = *seed;
    if (out_dir) cfg.output_dir = *out_dir;
}

}  // namespace uotflow::config
