#include "okcanon/pipeline.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "okcanon/embedding.hpp"
#include "okcanon/error.hpp"
#include "okcanon/side_info.hpp"

namespace okcanon {

namespace {

std::string format_double(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

Linkage parse_linkage(const std::string& s) {
    if (s == "single") return Linkage::single;
    if (s == "complete") return Linkage::complete;
    if (s == "average") return Linkage::average;
    throw Error("cli", "unknown linkage: " + s);
}

KgeBackend parse_backend(const std::string& s) {
    if (s == "hole") return KgeBackend::hole;
    if (s == "transe") return KgeBackend::transe;
    throw Error("cli", "unknown kge_backend: " + s);
}

CanonicalSource parse_canonical_source(const std::string& s) {
    if (s == "cluster_mean") return CanonicalSource::cluster_mean;
    if (s == "phrase_latent") return CanonicalSource::phrase_latent;
    throw Error("cli", "unknown canonical_source: " + s);
}

OptimizerKind parse_optimizer(const std::string& s) {
    if (s == "sgd") return OptimizerKind::sgd;
    if (s == "adam") return OptimizerKind::adam;
    throw Error("cli", "unknown optimizer: " + s);
}

// Deterministic 20% validation split over labeled phrases.
GoldLabels validation_subset(const GoldLabels& gold, std::uint64_t seed) {
    GoldLabels subset;
    for (const auto& [id, entity] : gold.entity_of)
        if (Rng::mix(seed, id) % 5 == 0) subset.entity_of.emplace(id, entity);
    if (subset.entity_of.empty()) return gold;
    return subset;
}

double tune_hac_threshold(const Eigen::MatrixXd& dist, Linkage linkage,
                          const std::vector<double>& grid, const GoldLabels& gold,
                          std::uint64_t seed) {
    const GoldLabels subset = validation_subset(gold, seed);
    double best_threshold = grid.front();
    double best_score = -1.0;
    for (double threshold : grid) {
        ClusterAssignment a = hac_cluster_from_distances(dist, linkage, threshold);
        const double score = evaluate(a, subset).average_f1;
        if (score > best_score) {
            best_score = score;
            best_threshold = threshold;
        }
    }
    return best_threshold;
}

// Contextual vectors are keyed by the phrase surface with spaces replaced by
// underscores; phrases missing from the file fall back to their base vector.
Eigen::MatrixXd contextual_or_base(const Corpus& corpus, const Eigen::MatrixXd& base,
                                   const std::string& path) {
    if (path.empty()) return base;
    VectorStore store = load_vectors(path, 0);
    Eigen::MatrixXd out(store.dim, base.cols());
    if (store.dim == base.rows()) out = base; // aligned fallback possible
    std::size_t misses = 0;
    for (Eigen::Index i = 0; i < base.cols(); ++i) {
        std::string key = corpus.phrases.surface(static_cast<std::uint32_t>(i));
        for (auto& ch : key)
            if (ch == ' ') ch = '_';
        auto it = store.vectors.find(key);
        if (it != store.vectors.end()) {
            out.col(i) = it->second;
        } else if (store.dim == base.rows()) {
            out.col(i) = base.col(i);
            ++misses;
        } else {
            throw Error("embedding",
                        "contextual vectors (dim " + std::to_string(store.dim) +
                            ") missing phrase \"" + key +
                            "\" and dimension prevents fallback to base vectors");
        }
    }
    (void)misses;
    return out;
}

} // namespace

void apply_config_json(RunConfig& c, const std::string& json_text) {
    nlohmann::json j = nlohmann::json::parse(json_text);
    if (!j.is_object()) throw Error("cli", "config must be a JSON object");

    auto get = [&](const char* key, auto& field) {
        if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("triples", c.triples);
    get("gold", c.gold);
    get("sentences", c.sentences);
    get("vectors", c.vectors);
    get("contextual_vectors", c.contextual_vectors);
    get("paraphrase_edges", c.paraphrase_edges);
    get("entity_links", c.entity_links);
    get("output_dir", c.output_dir);
    get("dim", c.dim);
    get("kge_dim", c.kge_dim);
    get("time_steps", c.time_steps);
    get("beta_start", c.beta_start);
    get("beta_end", c.beta_end);
    get("net_hidden_width", c.net_hidden_width);
    get("net_hidden_layers", c.net_hidden_layers);
    get("linkage", c.linkage);
    get("hac_threshold", c.hac_threshold);
    get("hac_tune_thresholds", c.hac_tune_thresholds);
    get("epochs_stage1", c.epochs_stage1);
    get("epochs_stage2", c.epochs_stage2);
    get("lr_stage1", c.lr_stage1);
    get("lr_stage2", c.lr_stage2);
    get("optimizer", c.optimizer);
    get("seed", c.seed);
    get("n_negatives", c.n_negatives);
    get("lambda_diff", c.lambda_diff);
    get("lambda_clu", c.lambda_clu);
    get("lambda_kge", c.lambda_kge);
    get("lambda_side", c.lambda_side);
    get("idf_threshold", c.idf_threshold);
    get("transe_margin", c.transe_margin);
    get("augment", c.augment);
    get("kge_backend", c.kge_backend);
    get("canonical_source", c.canonical_source);
    get("no_diffusion", c.no_diffusion);
    get("no_side", c.no_side);
}

RunConfig config_from_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cli", "cannot open config: " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    RunConfig config;
    apply_config_json(config, buf.str());
    return config;
}

PipelineResult run_canonicalize(const RunConfig& config) {
    if (config.triples.empty()) throw Error("cli", "no triples file configured");
    if (config.vectors.empty()) throw Error("cli", "no vectors file configured");

    PipelineResult result;
    result.corpus = load_triples(config.triples);
    Corpus& corpus = result.corpus;
    if (!config.sentences.empty()) load_sentences(config.sentences, corpus);
    if (!config.gold.empty()) {
        result.gold = load_gold(config.gold, corpus);
        result.has_gold = !result.gold.entity_of.empty();
    }

    const NeighborIndex neighbors = neighbor_index(corpus);
    const VectorStore store = load_vectors(config.vectors, config.dim);
    const Eigen::MatrixXd base = embed_all_phrases(corpus, store);
    const AugmentedTable table = augment(base, neighbors, config.augment);

    // Candidate equivalence evidence.
    TokenStats stats = build_token_stats(corpus);
    CandidatePairs pairs;
    if (!config.no_side) {
        std::optional<std::filesystem::path> para, links;
        if (!config.paraphrase_edges.empty()) para = config.paraphrase_edges;
        if (!config.entity_links.empty()) links = config.entity_links;
        pairs = build_equivalence(para, links, corpus, stats, config.idf_threshold);
    }

    // Initialization clustering runs on contextual vectors when provided.
    const Linkage linkage = parse_linkage(config.linkage);
    const Eigen::MatrixXd hac_input =
        contextual_or_base(corpus, base, config.contextual_vectors);
    const Eigen::MatrixXd dist = cosine_distance_matrix(hac_input);
    double threshold = config.hac_threshold;
    if (!config.hac_tune_thresholds.empty() && result.has_gold)
        threshold = tune_hac_threshold(dist, linkage, config.hac_tune_thresholds,
                                       result.gold, config.seed);
    result.hac_threshold_used = threshold;
    result.hac_assignment = hac_cluster_from_distances(dist, linkage, threshold);

    Problem problem;
    problem.corpus = &corpus;
    problem.inputs = table.augmented;
    problem.weak_labels = result.hac_assignment;
    problem.pairs = pairs;
    problem.schedule = make_schedule(config.time_steps, config.beta_start, config.beta_end);
    problem.use_diffusion = !config.no_diffusion;
    problem.canonical_source = parse_canonical_source(config.canonical_source);
    problem.n_negatives = config.n_negatives;

    InitOptions options;
    options.seed = config.seed;
    options.weights.clustering = config.lambda_clu;
    options.weights.diffusion = config.no_diffusion ? 0.0 : config.lambda_diff;
    options.weights.kge = config.lambda_kge;
    options.weights.side = config.no_side ? 0.0 : config.lambda_side;
    options.optimizer = parse_optimizer(config.optimizer);
    options.net_hidden_width = config.net_hidden_width;
    options.net_hidden_layers = config.net_hidden_layers;
    options.kge_dim = config.kge_dim;
    options.transe_margin = config.transe_margin;
    options.backend = parse_backend(config.kge_backend);

    TrainState state = init_train_state(problem, options);

    StageSettings s1{config.epochs_stage1, config.lr_stage1, 1e6};
    StageSettings s2{config.epochs_stage2, config.lr_stage2, 1e6};
    stage_one(state, problem, s1, result.loss_log);
    stage_two(state, problem, s2, result.loss_log);

    result.assignment = infer_clusters(state, problem);
    if (result.has_gold) {
        result.metrics = evaluate(result.assignment, result.gold);
        result.hac_metrics = evaluate(result.hac_assignment, result.gold);
    }
    return result;
}

void write_cluster_file(const std::filesystem::path& path, const ClusterAssignment& pred,
                        const Corpus& corpus) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cli", "cannot write cluster file: " + path.string());
    std::vector<std::vector<NounPhraseId>> members(pred.k);
    for (std::size_t i = 0; i < pred.labels.size(); ++i)
        members[pred.labels[i]].push_back(static_cast<NounPhraseId>(i));
    // Member lists are already id-ordered; order clusters by smallest member.
    std::vector<std::size_t> order(members.size());
    for (std::size_t c = 0; c < members.size(); ++c) order[c] = c;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return members[a].front() < members[b].front();
    });
    for (std::size_t c : order) {
        for (std::size_t i = 0; i < members[c].size(); ++i) {
            if (i) out << '\t';
            out << corpus.phrases.surface(members[c][i]);
        }
        out << '\n';
    }
}

void write_loss_log(const std::filesystem::path& path, const std::vector<LossReport>& log) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cli", "cannot write loss log: " + path.string());
    out << "epoch,stage,L_diff,L_clu,L_kge,L_side,objective\n";
    for (const LossReport& r : log)
        out << r.epoch << ',' << r.stage << ',' << format_double(r.diffusion) << ','
            << format_double(r.clustering) << ',' << format_double(r.kge) << ','
            << format_double(r.side) << ',' << format_double(r.objective) << '\n';
}

void write_metrics_file(const std::filesystem::path& path, const Metrics& metrics) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cli", "cannot write metrics: " + path.string());
    out << metrics_to_json(metrics) << '\n';
}

void write_outputs(const RunConfig& config, const PipelineResult& result) {
    const std::filesystem::path dir = config.output_dir;
    std::filesystem::create_directories(dir);
    write_cluster_file(dir / "clusters.tsv", result.assignment, result.corpus);
    write_loss_log(dir / "loss_log.csv", result.loss_log);
    if (result.metrics) write_metrics_file(dir / "metrics.json", *result.metrics);
}

Metrics evaluate_files(const std::filesystem::path& pred_path,
                       const std::filesystem::path& gold_path, bool skip_unlabeled) {
    std::ifstream gold_in(gold_path);
    if (!gold_in) throw Error("cli", "cannot open gold file: " + gold_path.string());
    std::unordered_map<std::string, std::string> gold_by_surface;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(gold_in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        auto pos = line.find('\t');
        if (pos == std::string::npos)
            throw Error("cli", "gold line " + std::to_string(line_no) +
                                   ": expected 2 tab-separated fields");
        std::string phrase = normalize_surface(line.substr(0, pos));
        std::string entity = normalize_surface(line.substr(pos + 1));
        if (phrase.empty() || entity.empty())
            throw Error("cli", "gold line " + std::to_string(line_no) + ": empty field");
        gold_by_surface.emplace(std::move(phrase), std::move(entity));
    }

    std::ifstream pred_in(pred_path);
    if (!pred_in) throw Error("cli", "cannot open prediction file: " + pred_path.string());
    StringTable phrases;
    ClusterAssignment pred;
    GoldLabels gold;
    line_no = 0;
    std::uint32_t cluster = 0;
    while (std::getline(pred_in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        std::size_t start = 0;
        bool any = false;
        while (start <= line.size()) {
            auto pos = line.find('\t', start);
            std::string field = line.substr(
                start, pos == std::string::npos ? std::string::npos : pos - start);
            start = pos == std::string::npos ? line.size() + 1 : pos + 1;
            std::string phrase = normalize_surface(field);
            if (phrase.empty()) {
                if (pos == std::string::npos) break;
                throw Error("cli", "prediction line " + std::to_string(line_no) +
                                       ": empty phrase field");
            }
            const std::size_t before = phrases.size();
            const auto id = phrases.intern(phrase);
            if (phrases.size() == before)
                throw Error("cli", "prediction line " + std::to_string(line_no) +
                                       ": phrase \"" + phrase + "\" appears twice");
            auto git = gold_by_surface.find(phrase);
            if (git == gold_by_surface.end()) {
                if (!skip_unlabeled)
                    throw Error("cli", "prediction line " + std::to_string(line_no) +
                                           ": unknown phrase \"" + phrase + "\"");
            } else {
                gold.entity_of.emplace(id, git->second);
            }
            pred.labels.push_back(cluster);
            any = true;
            if (pos == std::string::npos) break;
        }
        if (any) ++cluster;
    }
    pred.k = cluster;
    if (pred.labels.empty()) throw Error("cli", "prediction file has no clusters");
    return evaluate(pred, gold);
}

std::vector<SweepRow> run_sweep(const RunConfig& base, SweepAxis axis,
                                const std::vector<double>& values) {
    if (values.empty()) throw Error("cli", "sweep needs at least one value");
    std::vector<SweepRow> rows;
    for (double value : values) {
        SweepRow row;
        row.value = value;
        RunConfig config = base;
        try {
            if (axis == SweepAxis::dim) config.dim = static_cast<int>(value);
            else config.lambda_diff = value;
            PipelineResult result = run_canonicalize(config);
            if (!result.metrics)
                throw Error("cli", "sweep requires gold labels to score runs");
            row.metrics = *result.metrics;
            row.ok = true;
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
    std::ostringstream out;
    out << "value,macro_f1,micro_f1,pair_f1,average_f1,error\n";
    for (const SweepRow& r : rows) {
        out << format_double(r.value) << ',';
        if (r.ok)
            out << format_double(r.metrics.macro_f1) << ','
                << format_double(r.metrics.micro_f1) << ','
                << format_double(r.metrics.pair_f1) << ','
                << format_double(r.metrics.average_f1) << ',';
        else
            out << ",,,,";
        std::string msg = r.error;
        for (auto& ch : msg)
            if (ch == ',' || ch == '\n') ch = ';';
        out << msg << '\n';
    }
    return out.str();
}

} // namespace okcanon
