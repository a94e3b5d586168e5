// Command-line front end: synth | metrics | audit | report.
// Exit codes: 0 success, 1 internal error, 2 user/input error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hga/config.hpp"
#include "hga/graph.hpp"
#include "hga/metrics.hpp"
#include "hga/patterns.hpp"
#include "hga/report.hpp"
#include "hga/synth.hpp"
#include "hga/treatment.hpp"

namespace fs = std::filesystem;

namespace {

struct CommonOpts {
    std::string graph_dir;
    std::string preds;
    std::string out = ".";
    double alpha = 0.05;
    long n_min = 30;
    long s_min = 5;
    double clip = 0.01;
    int bootstrap_n = 200;
    uint64_t seed = 0;
    int threads = 1;
    std::string outcome = "hetero_majority";
    std::string pattern_file;
    std::string adjust = "search"; // "search", "none", or comma list of covariates
};

std::vector<hga::RelationGenConfig> parse_relations(const std::string& spec) {
    std::vector<hga::RelationGenConfig> rels;
    std::istringstream in(spec);
    std::string item;
    while (std::getline(in, item, ',')) {
        hga::RelationGenConfig r;
        std::istringstream fields(item);
        std::string name, h, deg;
        std::getline(fields, name, ':');
        std::getline(fields, h, ':');
        std::getline(fields, deg, ':');
        if (name.empty() || h.empty()) throw hga::InvalidInput("bad relation spec: " + item);
        r.name = name;
        r.homophily = std::stod(h);
        if (!deg.empty()) r.out_degree = std::stoi(deg);
        rels.push_back(r);
    }
    if (rels.empty()) throw hga::InvalidInput("empty relation spec");
    return rels;
}

void apply_config_file(const std::string& path, CommonOpts& o) {
    auto kv = hga::load_config_file(path);
    auto get = [&](const char* key, auto& slot) {
        auto it = kv.find(key);
        if (it == kv.end()) return;
        std::istringstream in(it->second);
        in >> slot;
    };
    get("graph_dir", o.graph_dir);
    get("preds", o.preds);
    get("out", o.out);
    get("alpha", o.alpha);
    get("n_min", o.n_min);
    get("s_min", o.s_min);
    get("clip", o.clip);
    get("bootstrap", o.bootstrap_n);
    get("seed", o.seed);
    get("threads", o.threads);
    get("outcome", o.outcome);
    get("patterns", o.pattern_file);
    get("adjust", o.adjust);
}

int cmd_synth(const CommonOpts& o, int n_nodes, int n_classes, const std::string& relations,
              int s, double true_ate, double base_rate, double homo_rate,
              const std::map<std::string, int>& extra_types) {
    if (n_nodes < 2) throw hga::InvalidInput("--nodes must be >= 2");
    if (n_classes < 2) throw hga::InvalidInput("--classes must be >= 2");
    hga::GraphGenConfig gcfg;
    gcfg.n_nodes = n_nodes;
    gcfg.class_weights.assign(n_classes, 1.0 / n_classes);
    gcfg.relations = parse_relations(relations);
    gcfg.extra_type_counts = extra_types;
    gcfg.seed = o.seed;
    hga::HeteroGraph g = hga::generate_graph(gcfg);

    hga::PredictionGenConfig pcfg;
    pcfg.s = s;
    pcfg.planted_ate = true_ate;
    pcfg.base_rate = base_rate;
    pcfg.homo_correct = homo_rate;
    pcfg.seed = o.seed;
    auto records = hga::generate_predictions(g, pcfg);

    fs::create_directories(o.out);
    hga::save_graph(g, o.out + "/nodes.tsv", o.out + "/edges.tsv");
    hga::write_preds_tsv(o.out + "/preds.tsv", g, records);
    return 0;
}

hga::HeteroGraph load_graph_dir(const std::string& dir) {
    return hga::load_graph(dir + "/nodes.tsv", dir + "/edges.tsv");
}

int cmd_metrics(const CommonOpts& o) {
    hga::HeteroGraph g = load_graph_dir(o.graph_dir);
    hga::HomoProjection proj = hga::project_homogeneous(g);
    auto profiles = hga::compute_profiles(g, proj, o.threads);
    auto indicators = hga::compute_all_indicators(profiles);
    fs::create_directories(o.out);
    hga::write_profiles_tsv(o.out + "/profiles.tsv", g, profiles);
    hga::write_indicators_tsv(o.out + "/indicators.tsv", g, indicators);
    return 0;
}

int cmd_audit(const CommonOpts& o) {
    hga::HeteroGraph g = load_graph_dir(o.graph_dir);
    hga::HomoProjection proj = hga::project_homogeneous(g);
    auto profiles = hga::compute_profiles(g, proj, o.threads);
    auto indicators = hga::compute_all_indicators(profiles);
    hga::PredictionLog log = hga::load_predictions(o.preds, g);

    std::unordered_map<hga::NodeId, hga::Split> splits;
    bool have_splits = fs::exists(o.graph_dir + "/splits.tsv");
    if (have_splits) splits = hga::load_splits(o.graph_dir + "/splits.tsv", g);

    hga::AuditTable table = hga::build_audit_table(
        g, profiles, indicators, log, hga::parse_outcome_spec(o.outcome), {},
        have_splits ? &splits : nullptr);

    std::vector<hga::PatternSpec> specs = hga::builtin_patterns();
    if (!o.pattern_file.empty()) {
        auto extra = hga::load_pattern_file(o.pattern_file);
        specs.insert(specs.end(), extra.begin(), extra.end());
    }

    hga::AuditConfig cfg;
    cfg.alpha = o.alpha;
    cfg.n_min = o.n_min;
    cfg.s_min = o.s_min;
    cfg.clip = o.clip;
    cfg.bootstrap_n = o.bootstrap_n;
    cfg.base_seed = o.seed;
    if (o.adjust == "search") {
        cfg.adjustment_search = true;
    } else if (o.adjust == "none") {
        cfg.adjustment_search = false;
    } else {
        std::istringstream in(o.adjust);
        std::string name;
        while (std::getline(in, name, ',')) cfg.adjustment_covariates.push_back(name);
    }

    auto reports = hga::audit_patterns(table, specs, cfg);

    std::vector<std::vector<hga::IndicatorVector>> one_dataset = {indicators};
    hga::OccurrenceReport occurrence = hga::occurrence_stats(one_dataset, specs);

    fs::create_directories(o.out);
    hga::write_effects_json(o.out + "/effects.json", reports, cfg);
    hga::write_effects_csv(o.out + "/effects.csv", reports);
    hga::write_markdown_report(o.out + "/patterns_report.md", reports, &occurrence);
    return 0;
}

// Re-render a markdown summary from an existing effects.json.
int cmd_report(const std::string& effects_path, const std::string& out_path) {
    std::ifstream in(effects_path);
    if (!in) throw hga::ParseError("cannot open " + effects_path);
    nlohmann::json root = nlohmann::json::parse(in);
    std::ofstream out(out_path);
    if (!out) throw hga::InvalidInput("cannot write " + out_path);
    out << "# Pattern audit report\n\n";
    out << "| Pattern | n1 | n0 | q | E-value | PASS |\n|---|---|---|---|---|---|\n";
    for (const auto& p : root.at("patterns")) {
        auto cell = [&](const char* key) -> std::string {
            if (!p.contains(key) || p[key].is_null()) return "-";
            std::ostringstream os;
            os << p[key];
            return os.str();
        };
        out << "| " << p.at("pattern").get<std::string>() << " | " << cell("n1") << " | "
            << cell("n0") << " | " << cell("q") << " | " << cell("e_value") << " | "
            << (p.at("pass").get<bool>() ? "yes" : "no") << " |\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"causal audit of heterogeneous-graph structural patterns"};
    app.require_subcommand(1);

    CommonOpts o;
    // config file values override defaults; explicit flags override both
    for (int i = 1; i + 1 < argc; ++i) {
        if (std::string(argv[i]) == "--config") {
            try {
                apply_config_file(argv[i + 1], o);
            } catch (const std::exception& e) {
                std::cerr << "error: " << e.what() << '\n';
                return 2;
            }
        }
    }
    std::string config_ignored;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--out", o.out, "output directory");
        cmd->add_option("--seed", o.seed, "base seed for all randomness");
        cmd->add_option("--threads", o.threads, "worker cap (outputs are independent of it)");
        cmd->add_option("--config", config_ignored, "key=value config file");
    };

    int n_nodes = 2000, n_classes = 2, s = 5;
    double true_ate = 0.08, base_rate = 0.45, homo_rate = 0.5;
    std::string relations = "r0:0.8:5,r1:0.3:5";
    std::map<std::string, int> extra_types;
    CLI::App* synth = app.add_subcommand("synth", "generate graph + prediction fixtures");
    synth->add_option("--nodes", n_nodes, "target-type node count");
    synth->add_option("--classes", n_classes, "number of classes");
    synth->add_option("--relations", relations, "name:homophily[:degree],...");
    synth->add_option("--s", s, "seeds per model");
    synth->add_option("--true-ate", true_ate, "planted accuracy lift for pattern P1");
    synth->add_option("--base-rate", base_rate, "off-pattern hetero success rate");
    synth->add_option("--homo-rate", homo_rate, "per-seed homogeneous accuracy");
    add_common(synth);

    CLI::App* metrics = app.add_subcommand("metrics", "write per-node profiles and indicators");
    metrics->add_option("--graph-dir", o.graph_dir, "directory with nodes.tsv/edges.tsv")
        ->required();
    add_common(metrics);

    CLI::App* audit = app.add_subcommand("audit", "run the full per-pattern causal battery");
    audit->add_option("--graph-dir", o.graph_dir, "directory with nodes.tsv/edges.tsv")
        ->required();
    audit->add_option("--preds", o.preds, "preds.tsv path")->required();
    audit->add_option("--alpha", o.alpha, "FDR level");
    audit->add_option("--n-min", o.n_min, "minimal group size");
    audit->add_option("--s-min", o.s_min, "minimal expected cell count");
    audit->add_option("--clip", o.clip, "propensity clipping bound");
    audit->add_option("--bootstrap", o.bootstrap_n, "bootstrap resamples");
    audit->add_option("--outcome", o.outcome,
                      "hetero_majority | homo_majority | hetero_all_seeds");
    audit->add_option("--patterns", o.pattern_file, "extra pattern definitions");
    audit->add_option("--adjust", o.adjust, "'search', 'none', or covariate list");
    add_common(audit);

    std::string effects_path, report_out = "patterns_report.md";
    CLI::App* report = app.add_subcommand("report", "re-render markdown from effects.json");
    report->add_option("--effects", effects_path, "effects.json path")->required();
    report->add_option("--out-file", report_out, "markdown output path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (synth->parsed())
            return cmd_synth(o, n_nodes, n_classes, relations, s, true_ate, base_rate, homo_rate,
                             extra_types);
        if (metrics->parsed()) return cmd_metrics(o);
        if (audit->parsed()) return cmd_audit(o);
        if (report->parsed()) return cmd_report(effects_path, report_out);
    } catch (const hga::ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const hga::InvalidInput& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
