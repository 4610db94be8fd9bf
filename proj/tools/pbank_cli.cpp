// Command-line front end for the projection-bank pipeline. Stages talk to
// each other only through the documented file formats; every command writes
// a manifest with its resolved parameters next to its outputs, and all
// outputs are staged and renamed into place only after the command succeeds.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pbank/pbank.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitDataError = 1;
constexpr int kExitUsage = 2;

class OutputStager {
public:
    void add(const fs::path& path, std::vector<std::uint8_t> bytes) {
        staged_.emplace_back(path, std::move(bytes));
    }

    void add_text(const fs::path& path, const std::string& text) {
        staged_.emplace_back(path, std::vector<std::uint8_t>(text.begin(), text.end()));
    }

    std::vector<std::string> paths() const {
        std::vector<std::string> out;
        for (const auto& [p, _] : staged_) out.push_back(p.string());
        return out;
    }

    // Everything is computed before anything lands on disk; each file then
    // goes through temp-write + rename.
    void commit() {
        for (const auto& [path, bytes] : staged_) pbank::write_file_atomic(path, bytes);
    }

private:
    std::vector<std::pair<fs::path, std::vector<std::uint8_t>>> staged_;
};

std::string manifest_json(const std::string& command,
                          const std::map<std::string, std::string>& parameters,
                          const std::vector<std::string>& outputs) {
    json m;
    m["command"] = command;
    m["parameters"] = parameters;
    m["outputs"] = outputs;
    m["manifest_version"] = 1;
    return m.dump(2) + "\n";
}

std::string fmt_double(double v) {
    std::ostringstream out;
    out.precision(17);
    out << v;
    return out.str();
}

// Shared trainer options; defaults follow the adaptive-gradient schedule
// (gamma_0 = 1, grow 1.2, shrink 0.5, 70 iterations).
struct TrainerFlags {
    double lambda = 1.0;
    std::size_t iters = 70;
    double gamma0 = 1.0;
    double grow = 1.2;
    double shrink = 0.5;
    double tol = 1e-6;
    double perturb = 1e-4;
    std::size_t pairs_pos = 256;
    std::size_t pairs_neg = 256;
    bool no_diagonal = false;
    bool fixed_pairs = false;
    bool augment_bias = false;
    std::uint64_t seed = 0;

    void attach(CLI::App* cmd, bool include_lambda = true) {
        if (include_lambda)
            cmd->add_option("--lambda", lambda, "Hinge weight (balance parameter)")
                ->capture_default_str();
        cmd->add_option("--iters", iters, "Max gradient iterations")->capture_default_str();
        cmd->add_option("--gamma0", gamma0, "Initial step length")->capture_default_str();
        cmd->add_option("--grow", grow, "Step growth on accepted steps")->capture_default_str();
        cmd->add_option("--shrink", shrink, "Step shrink on rejected steps")
            ->capture_default_str();
        cmd->add_option("--tol", tol, "Relative stopping tolerance")->capture_default_str();
        cmd->add_option("--perturb", perturb, "Zero-margin perturbation norm")
            ->capture_default_str();
        cmd->add_option("--pairs-pos", pairs_pos, "Positive pairs per batch")
            ->capture_default_str();
        cmd->add_option("--pairs-neg", pairs_neg, "Negative pairs per batch")
            ->capture_default_str();
        cmd->add_flag("--no-diagonal", no_diagonal, "Drop the (i,i) margin constraints");
        cmd->add_flag("--fixed-pairs", fixed_pairs, "Draw one pair batch instead of resampling");
        cmd->add_flag("--augment-bias", augment_bias,
                      "Append a -1 coordinate per subspace (bias term)");
        cmd->add_option("--seed", seed, "Training seed")->capture_default_str();
    }

    pbank::TrainerConfig to_config() const {
        pbank::TrainerConfig cfg;
        cfg.lambda = lambda;
        cfg.max_iters = iters;
        cfg.initial_step = gamma0;
        cfg.grow_factor = grow;
        cfg.shrink_factor = shrink;
        cfg.stop_tolerance = tol;
        cfg.perturbation_scale = perturb;
        cfg.pair_batch.n_pos = pairs_pos;
        cfg.pair_batch.n_neg = pairs_neg;
        cfg.pair_batch.include_diagonal = !no_diagonal;
        cfg.resample_pairs = !fixed_pairs;
        cfg.augment_bias = augment_bias;
        cfg.seed = seed;
        return cfg;
    }

    void record(std::map<std::string, std::string>& p) const {
        p["--lambda"] = fmt_double(lambda);
        p["--iters"] = std::to_string(iters);
        p["--gamma0"] = fmt_double(gamma0);
        p["--grow"] = fmt_double(grow);
        p["--shrink"] = fmt_double(shrink);
        p["--tol"] = fmt_double(tol);
        p["--perturb"] = fmt_double(perturb);
        p["--pairs-pos"] = std::to_string(pairs_pos);
        p["--pairs-neg"] = std::to_string(pairs_neg);
        if (no_diagonal) p["--no-diagonal"] = "";
        if (fixed_pairs) p["--fixed-pairs"] = "";
        if (augment_bias) p["--augment-bias"] = "";
        p["--seed"] = std::to_string(seed);
    }
};

void warn_degenerate(const pbank::BankTrainReport& report) {
    for (auto p : report.degenerate_subspaces())
        std::cerr << "warning: subspace " << p
                  << " is degenerate (all samples identical); emitted a fixed unit vector\n";
}

pbank::KernelSpec parse_kernel(const std::string& kernel, std::uint32_t tau,
                               const std::string& sigma) {
    if (kernel == "poly") return pbank::KernelSpec::polynomial(tau);
    if (kernel != "rbf") pbank::raise(pbank::errc::invalid_argument, "unknown kernel " + kernel);
    if (sigma == "auto") return pbank::KernelSpec::rbf_auto();
    return pbank::KernelSpec::rbf(std::stod(sigma));
}

std::string rankings_csv(const pbank::RetrievalResult& result) {
    std::ostringstream out;
    out << "query,rank,gallery_index,distance\n";
    for (std::size_t q = 0; q < result.indices.size(); ++q)
        for (std::size_t t = 0; t < result.indices[q].size(); ++t)
            out << q << "," << t << "," << result.indices[q][t] << ","
                << result.distances[q][t] << "\n";
    return out.str();
}

// ---------------------------------------------------------------------------

struct GenCmd {
    std::size_t clusters = 10;
    std::size_t per = 200;
    std::size_t dims = 512;
    double noise = 0.1;
    std::uint64_t seed = 0;
    bool augment_bias = false;
    std::string output = ".";

    int run() const {
        auto split = pbank::generate_synthetic(clusters, per, dims, noise, seed);
        if (augment_bias) {
            split.train = split.train.with_bias_coordinate();
            split.gallery = split.gallery.with_bias_coordinate();
            split.query = split.query.with_bias_coordinate();
        }
        const fs::path dir(output);
        OutputStager stage;
        stage.add(dir / "train.pbfm", pbank::serialize_matrix(split.train));
        stage.add(dir / "gallery.pbfm", pbank::serialize_matrix(split.gallery));
        stage.add(dir / "query.pbfm", pbank::serialize_matrix(split.query));
        std::map<std::string, std::string> params{
            {"--clusters", std::to_string(clusters)}, {"--per", std::to_string(per)},
            {"--dims", std::to_string(dims)},         {"--noise", fmt_double(noise)},
            {"--seed", std::to_string(seed)},         {"--output", output}};
        if (augment_bias) params["--augment-bias"] = "";

        const auto label_csv = [](const std::vector<std::int64_t>& labels) {
            std::ostringstream out;
            out << "index,label\n";
            for (std::size_t i = 0; i < labels.size(); ++i) out << i << "," << labels[i] << "\n";
            return out.str();
        };
        stage.add_text(dir / "train_labels.csv", label_csv(split.train_labels));
        stage.add_text(dir / "gallery_labels.csv", label_csv(split.gallery_labels));
        stage.add_text(dir / "query_labels.csv", label_csv(split.query_labels));
        stage.add_text(dir / "gen.manifest.json", manifest_json("gen", params, stage.paths()));
        stage.commit();
        return kExitOk;
    }
};

struct ClusterCmd {
    std::string input;
    std::size_t d = 64;
    std::uint64_t seed = 0;
    std::size_t iters = 100;
    std::string method = "kmeans";
    std::size_t sample_cap = 0;
    std::string output = "partition.pbsp";

    int run() const {
        const auto x = pbank::load_matrix(input);
        pbank::SubspacePartition partition =
            method == "random"
                ? pbank::random_split(x.n_dims(), d, seed)
                : pbank::cluster_dimensions(x, d, seed, iters, nullptr, sample_cap);
        OutputStager stage;
        std::vector<std::uint8_t> bytes;
        pbank::BinaryWriter w(bytes);
        pbank::write_partition(w, partition);
        stage.add(output, std::move(bytes));
        std::map<std::string, std::string> params{
            {"--input", input},           {"--d", std::to_string(d)},
            {"--seed", std::to_string(seed)}, {"--iters", std::to_string(iters)},
            {"--method", method},         {"--sample-cap", std::to_string(sample_cap)},
            {"--output", output}};
        stage.add_text(output + ".manifest.json",
                       manifest_json("cluster", params, stage.paths()));
        stage.commit();
        return kExitOk;
    }
};

struct LabelsCmd {
    std::string input;
    std::size_t k = 100;
    int threads = 0;
    std::string output = "pairs.csv";

    int run() const {
        const auto x = pbank::load_matrix(input);
        const auto labels = pbank::build_labels(x, k, pbank::resolve_threads(threads));
        std::ostringstream csv;
        csv << "i,j\n";
        for (const auto& [i, j] : labels.positive_pairs()) csv << i << "," << j << "\n";
        OutputStager stage;
        stage.add_text(output, csv.str());
        std::map<std::string, std::string> params{{"--input", input},
                                                  {"--k", std::to_string(k)},
                                                  {"--threads", std::to_string(threads)},
                                                  {"--output", output}};
        stage.add_text(output + ".manifest.json", manifest_json("labels", params, stage.paths()));
        stage.commit();
        return kExitOk;
    }
};

struct TrainBpbCmd {
    std::string input;
    std::string partition_path;
    std::size_t k = 100;
    TrainerFlags trainer;
    int threads = 0;
    std::string output = "bank.pblb";

    int run() const {
        const auto x = pbank::load_matrix(input);
        const auto partition = pbank::load_partition(partition_path);
        const auto labels = pbank::build_labels(x, k, pbank::resolve_threads(threads));
        pbank::BankTrainReport report;
        const auto bank = pbank::train_bank(x, partition, labels, trainer.to_config(),
                                            pbank::resolve_threads(threads), &report);
        warn_degenerate(report);
        OutputStager stage;
        stage.add(output, pbank::serialize_linear_bank(bank));
        std::map<std::string, std::string> params{{"--input", input},
                                                  {"--partition", partition_path},
                                                  {"--k", std::to_string(k)},
                                                  {"--threads", std::to_string(threads)},
                                                  {"--output", output}};
        trainer.record(params);
        stage.add_text(output + ".manifest.json",
                       manifest_json("train-bpb", params, stage.paths()));
        stage.commit();
        return kExitOk;
    }
};

struct TrainKbpbCmd {
    std::string input;
    std::string partition_path;
    std::size_t k = 100;
    std::string kernel = "rbf";
    std::uint32_t tau = 2;
    std::string sigma = "auto";
    std::size_t n_basis = 1500;
    bool mu_full_n = false;
    TrainerFlags trainer;
    int threads = 0;
    std::string output = "bank.pbkb";

    int run() const {
        const auto x = pbank::load_matrix(input);
        const auto partition = pbank::load_partition(partition_path);
        const auto labels = pbank::build_labels(x, k, pbank::resolve_threads(threads));
        auto cfg = trainer.to_config();
        cfg.kernel_mu_full_n = mu_full_n;
        pbank::require(!cfg.augment_bias, pbank::errc::invalid_argument,
                       "the kernel trainer has its own bias; --augment-bias is linear-only");
        const auto spec = parse_kernel(kernel, tau, sigma);
        pbank::BankTrainReport report;
        const auto bank = pbank::train_kernel_bank(x, partition, labels, spec, n_basis, cfg,
                                                   pbank::resolve_threads(threads), &report);
        warn_degenerate(report);
        OutputStager stage;
        stage.add(output, pbank::serialize_kernel_bank(bank));
        std::map<std::string, std::string> params{
            {"--input", input},   {"--partition", partition_path}, {"--k", std::to_string(k)},
            {"--kernel", kernel}, {"--tau", std::to_string(tau)},  {"--sigma", sigma},
            {"--n-basis", std::to_string(n_basis)},                {"--threads", std::to_string(threads)},
            {"--output", output}};
        if (mu_full_n) params["--mu-full-n"] = "";
        trainer.record(params);
        stage.add_text(output + ".manifest.json",
                       manifest_json("train-kbpb", params, stage.paths()));
        stage.commit();
        return kExitOk;
    }
};

struct EncodeCmd {
    std::string bank_path;
    std::string input;
    int threads = 0;
    std::string output = "codes.pbbc";

    int run() const {
        const auto x = pbank::load_matrix(input);
        const auto bytes = pbank::read_file_bytes(bank_path);
        pbank::require(bytes.size() >= 4, pbank::errc::bad_magic, "bank file too short");
        pbank::BinaryCodeSet codes;
        const unsigned threads_n = pbank::resolve_threads(threads);
        if (std::memcmp(bytes.data(), pbank::kLinearBankMagic, 4) == 0) {
            codes = pbank::encode_linear(pbank::load_linear_bank(bank_path), x, nullptr, threads_n);
        } else if (std::memcmp(bytes.data(), pbank::kKernelBankMagic, 4) == 0) {
            codes = pbank::encode_kernel(pbank::load_kernel_bank(bank_path), x, nullptr, threads_n);
        } else {
            pbank::raise(pbank::errc::bad_magic, bank_path + " is not a bank file");
        }
        OutputStager stage;
        stage.add(output, pbank::serialize_codes(codes));
        std::map<std::string, std::string> params{{"--bank", bank_path},
                                                  {"--input", input},
                                                  {"--threads", std::to_string(threads)},
                                                  {"--output", output}};
        stage.add_text(output + ".manifest.json", manifest_json("encode", params, stage.paths()));
        stage.commit();
        return kExitOk;
    }
};

struct EncodeBaselineCmd {
    std::string baseline;
    std::string input;
    std::string train;  // randst-bpb only
    std::size_t d = 64;
    std::size_t k = 100;
    TrainerFlags trainer;
    int threads = 0;
    std::string save_bank;
    std::string output = "codes.pbbc";

    int run() const {
        const auto x = pbank::load_matrix(input);
        OutputStager stage;
        std::map<std::string, std::string> params{{"baseline", baseline},
                                                  {"--input", input},
                                                  {"--threads", std::to_string(threads)},
                                                  {"--output", output}};
        pbank::BinaryCodeSet codes;
        if (baseline == "sign") {
            codes = pbank::encode_sign_baseline(x);
        } else if (baseline == "lsh") {
            codes = pbank::encode_lsh_baseline(x, d, trainer.seed,
                                               pbank::resolve_threads(threads));
            params["--d"] = std::to_string(d);
            params["--seed"] = std::to_string(trainer.seed);
        } else if (baseline == "randst-bpb") {
            pbank::require(!train.empty(), pbank::errc::invalid_argument,
                           "randst-bpb needs --train for bank learning");
            const auto x_train = pbank::load_matrix(train);
            const auto partition = pbank::random_split(x_train.n_dims(), d, trainer.seed);
            const auto labels =
                pbank::build_labels(x_train, k, pbank::resolve_threads(threads));
            pbank::BankTrainReport report;
            const auto bank = pbank::train_bank(x_train, partition, labels, trainer.to_config(),
                                                pbank::resolve_threads(threads), &report);
            warn_degenerate(report);
            codes = pbank::encode_linear(bank, x, nullptr, pbank::resolve_threads(threads));
            if (!save_bank.empty()) stage.add(save_bank, pbank::serialize_linear_bank(bank));
            params["--train"] = train;
            params["--d"] = std::to_string(d);
            params["--k"] = std::to_string(k);
            if (!save_bank.empty()) params["--save-bank"] = save_bank;
            trainer.record(params);
        } else {
            pbank::raise(pbank::errc::invalid_argument, "unknown baseline " + baseline);
        }
        stage.add(output, pbank::serialize_codes(codes));
        stage.add_text(output + ".manifest.json",
                       manifest_json("encode-baseline", params, stage.paths()));
        stage.commit();
        return kExitOk;
    }
};

struct SearchCmd {
    std::string gallery;
    std::string queries;
    std::size_t k = 10;
    int threads = 0;
    std::string output = "rankings.csv";

    int run() const {
        const auto g = pbank::load_codes(gallery);
        const auto q = pbank::load_codes(queries);
        const auto result = pbank::hamming_search(g, q, k, pbank::resolve_threads(threads));
        OutputStager stage;
        stage.add_text(output, rankings_csv(result));
        std::map<std::string, std::string> params{{"--gallery", gallery},
                                                  {"--queries", queries},
                                                  {"--k", std::to_string(k)},
                                                  {"--threads", std::to_string(threads)},
                                                  {"--output", output}};
        stage.add_text(output + ".manifest.json", manifest_json("search", params, stage.paths()));
        stage.commit();
        return kExitOk;
    }
};

struct EvalCmd {
    std::string gallery;
    std::string queries;
    std::string gallery_labels;
    std::string query_labels;
    std::vector<std::size_t> k_values{10};
    std::string method = "pbank";
    int threads = 0;
    std::string output = ".";

    int run() const {
        const auto g = pbank::load_codes(gallery);
        const auto q = pbank::load_codes(queries);
        pbank::GroundTruth gt{pbank::load_labels_csv(gallery_labels),
                              pbank::load_labels_csv(query_labels)};
        // Rank the full gallery once; precision@k reads prefixes and the
        // PR curve needs full depth anyway.
        const auto result =
            pbank::hamming_search(g, q, g.n_samples(), pbank::resolve_threads(threads));
        std::vector<pbank::PrecisionRow> prec_rows;
        for (auto k : k_values)
            prec_rows.push_back(
                {method, g.n_bits(), k, pbank::precision_at_k(result, gt, k)});
        const auto curve = pbank::precision_recall_curve(result, gt);
        std::vector<pbank::PrCurveRow> pr_rows;
        for (const auto& pt : curve.points) pr_rows.push_back({method, g.n_bits(), pt});

        const fs::path dir(output);
        OutputStager stage;
        {
            std::ostringstream out;
            out << "method,bits,k,precision\n";
            out.precision(10);
            for (const auto& r : prec_rows)
                out << r.method << "," << r.bits << "," << r.k << "," << r.precision << "\n";
            stage.add_text(dir / "precision_at_k.csv", out.str());
        }
        {
            std::ostringstream out;
            out << "method,bits,cutoff,precision,recall\n";
            out.precision(10);
            for (const auto& r : pr_rows)
                out << r.method << "," << r.bits << "," << r.point.cutoff << ","
                    << r.point.precision << "," << r.point.recall << "\n";
            stage.add_text(dir / "pr_curve.csv", out.str());
        }
        std::cout << "method=" << method << " bits=" << g.n_bits() << " auc=" << curve.auc
                  << "\n";
        std::map<std::string, std::string> params{
            {"--gallery", gallery},
            {"--queries", queries},
            {"--gallery-labels", gallery_labels},
            {"--query-labels", query_labels},
            {"--method", method},
            {"--threads", std::to_string(threads)},
            {"--output", output}};
        for (std::size_t i = 0; i < k_values.size(); ++i)
            params["--k" + (i ? std::to_string(i) : "")] = std::to_string(k_values[i]);
        stage.add_text(dir / "eval.manifest.json", manifest_json("eval", params, stage.paths()));
        stage.commit();
        return kExitOk;
    }
};

struct DiagCmd {
    std::string input;
    std::vector<std::size_t> d_values{16, 32, 64};
    std::size_t k = 100;
    TrainerFlags trainer;
    std::size_t cluster_iters = 100;
    int threads = 0;
    std::string output = ".";

    int run() const {
        const auto x = pbank::load_matrix(input);
        const auto labels = pbank::build_labels(x, k, pbank::resolve_threads(threads));
        std::vector<pbank::DiagnosticRow> rows;
        for (auto d : d_values) {
            const auto partition =
                pbank::cluster_dimensions(x, d, trainer.seed, cluster_iters);
            const auto diag =
                pbank::pairwise_error_diagnostic(x, partition, labels, trainer.to_config(),
                                                 trainer.lambda, pbank::resolve_threads(threads));
            rows.push_back({d, diag.e_avg, diag.e_org});
            std::cout << "d=" << d << " e_avg=" << diag.e_avg << " e_org=" << diag.e_org << "\n";
        }
        const fs::path dir(output);
        OutputStager stage;
        {
            std::ostringstream out;
            out << "d,e_avg,e_org\n";
            out.precision(10);
            for (const auto& r : rows) out << r.d << "," << r.e_avg << "," << r.e_org << "\n";
            stage.add_text(dir / "diagnostic.csv", out.str());
        }
        std::map<std::string, std::string> params{{"--input", input},
                                                  {"--k", std::to_string(k)},
                                                  {"--cluster-iters", std::to_string(cluster_iters)},
                                                  {"--threads", std::to_string(threads)},
                                                  {"--output", output}};
        for (std::size_t i = 0; i < d_values.size(); ++i)
            params["--d" + (i ? std::to_string(i) : "")] = std::to_string(d_values[i]);
        trainer.record(params);
        stage.add_text(dir / "diag.manifest.json", manifest_json("diag", params, stage.paths()));
        stage.commit();
        return kExitOk;
    }
};

struct BenchCmd {
    std::size_t clusters = 10;
    std::size_t per = 200;
    std::size_t dims = 512;
    double noise = 0.1;
    std::size_t d = 64;
    std::size_t k = 100;
    std::vector<double> lambdas{1.0};
    std::vector<std::size_t> k_eval{10, 50};
    std::vector<std::string> methods{"bpb", "randst-bpb", "sign", "lsh"};
    std::string kernel = "rbf";
    std::uint32_t tau = 2;
    std::string sigma = "auto";
    std::size_t n_basis = 500;
    TrainerFlags trainer;
    int threads = 0;
    std::string output = ".";

    int run() const {
        const unsigned threads_n = pbank::resolve_threads(threads);
        auto split = pbank::generate_synthetic(clusters, per, dims, noise, trainer.seed);
        pbank::GroundTruth gt{split.gallery_labels, split.query_labels};
        const auto labels = pbank::build_labels(split.train, k, threads_n);
        const auto km_partition =
            pbank::cluster_dimensions(split.train, d, trainer.seed);
        const auto rs_partition = pbank::random_split(dims, d, trainer.seed);

        std::vector<pbank::PrecisionRow> prec_rows;
        std::vector<pbank::PrCurveRow> pr_rows;
        std::ostringstream auc_csv;
        auc_csv << "method,bits,auc\n";
        auc_csv.precision(10);

        auto evaluate = [&](const std::string& name, const pbank::BinaryCodeSet& gallery_codes,
                            const pbank::BinaryCodeSet& query_codes) {
            const auto result =
                pbank::hamming_search(gallery_codes, query_codes, gallery_codes.n_samples(),
                                      threads_n);
            for (auto kk : k_eval)
                prec_rows.push_back({name, gallery_codes.n_bits(), kk,
                                     pbank::precision_at_k(result, gt, kk)});
            const auto curve = pbank::precision_recall_curve(result, gt);
            for (const auto& pt : curve.points)
                pr_rows.push_back({name, gallery_codes.n_bits(), pt});
            auc_csv << name << "," << gallery_codes.n_bits() << "," << curve.auc << "\n";
            std::cout << "method=" << name << " bits=" << gallery_codes.n_bits()
                      << " auc=" << curve.auc << "\n";
        };

        for (const auto& method : methods) {
            if (method == "sign") {
                evaluate("sign", pbank::encode_sign_baseline(split.gallery),
                         pbank::encode_sign_baseline(split.query));
                continue;
            }
            if (method == "lsh") {
                evaluate("lsh",
                         pbank::encode_lsh_baseline(split.gallery, d, trainer.seed, threads_n),
                         pbank::encode_lsh_baseline(split.query, d, trainer.seed, threads_n));
                continue;
            }
            for (double lambda : lambdas) {
                auto cfg = trainer.to_config();
                cfg.lambda = lambda;
                const std::string suffix =
                    lambdas.size() > 1 ? "@lambda=" + fmt_double(lambda) : "";
                if (method == "bpb" || method == "randst-bpb") {
                    const auto& partition = method == "bpb" ? km_partition : rs_partition;
                    const auto bank =
                        pbank::train_bank(split.train, partition, labels, cfg, threads_n);
                    evaluate(method + suffix,
                             pbank::encode_linear(bank, split.gallery, nullptr, threads_n),
                             pbank::encode_linear(bank, split.query, nullptr, threads_n));
                } else if (method == "kbpb") {
                    const auto spec = parse_kernel(kernel, tau, sigma);
                    const auto bank = pbank::train_kernel_bank(split.train, km_partition, labels,
                                                               spec, n_basis, cfg, threads_n);
                    evaluate("kbpb-" + std::string(spec.name()) + suffix,
                             pbank::encode_kernel(bank, split.gallery, nullptr, threads_n),
                             pbank::encode_kernel(bank, split.query, nullptr, threads_n));
                } else {
                    pbank::raise(pbank::errc::invalid_argument, "unknown method " + method);
                }
            }
        }

        const fs::path dir(output);
        OutputStager stage;
        {
            std::ostringstream out;
            out << "method,bits,k,precision\n";
            out.precision(10);
            for (const auto& r : prec_rows)
                out << r.method << "," << r.bits << "," << r.k << "," << r.precision << "\n";
            stage.add_text(dir / "precision_at_k.csv", out.str());
        }
        {
            std::ostringstream out;
            out << "method,bits,cutoff,precision,recall\n";
            out.precision(10);
            for (const auto& r : pr_rows)
                out << r.method << "," << r.bits << "," << r.point.cutoff << ","
                    << r.point.precision << "," << r.point.recall << "\n";
            stage.add_text(dir / "pr_curve.csv", out.str());
        }
        stage.add_text(dir / "auc.csv", auc_csv.str());

        std::map<std::string, std::string> params{
            {"--clusters", std::to_string(clusters)},
            {"--per", std::to_string(per)},
            {"--dims", std::to_string(dims)},
            {"--noise", fmt_double(noise)},
            {"--d", std::to_string(d)},
            {"--k", std::to_string(k)},
            {"--kernel", kernel},
            {"--tau", std::to_string(tau)},
            {"--sigma", sigma},
            {"--n-basis", std::to_string(n_basis)},
            {"--threads", std::to_string(threads)},
            {"--output", output}};
        for (std::size_t i = 0; i < lambdas.size(); ++i)
            params["--lambda" + (i ? std::to_string(i) : "")] = fmt_double(lambdas[i]);
        for (std::size_t i = 0; i < k_eval.size(); ++i)
            params["--k-eval" + (i ? std::to_string(i) : "")] = std::to_string(k_eval[i]);
        for (std::size_t i = 0; i < methods.size(); ++i)
            params["--methods" + (i ? std::to_string(i) : "")] = methods[i];
        trainer.record(params);
        params.erase("--lambda");  // recorded via the sweep list above
        stage.add_text(dir / "bench.manifest.json",
                       manifest_json("bench", params, stage.paths()));
        stage.commit();
        return kExitOk;
    }
};

}  // namespace

int run(int argc, char** argv) {
    CLI::App app{"Projection-bank binary coding pipeline"};
    app.require_subcommand(1);

    GenCmd gen;
    auto* gen_cmd = app.add_subcommand("gen", "Generate a synthetic Gaussian-mixture dataset");
    gen_cmd->add_option("--clusters", gen.clusters)->capture_default_str();
    gen_cmd->add_option("--per", gen.per, "Samples per cluster")->capture_default_str();
    gen_cmd->add_option("--dims", gen.dims)->capture_default_str();
    gen_cmd->add_option("--noise", gen.noise)->capture_default_str();
    gen_cmd->add_option("--seed", gen.seed)->capture_default_str();
    gen_cmd->add_flag("--augment-bias", gen.augment_bias,
                      "Append a constant -1 dimension to all splits");
    gen_cmd->add_option("--output", gen.output, "Output directory")->capture_default_str();

    ClusterCmd cluster;
    auto* cluster_cmd = app.add_subcommand("cluster", "Partition dimensions into subspaces");
    cluster_cmd->add_option("--input", cluster.input)->required();
    cluster_cmd->add_option("--d", cluster.d, "Number of subspaces (= code bits)")
        ->capture_default_str();
    cluster_cmd->add_option("--seed", cluster.seed)->capture_default_str();
    cluster_cmd->add_option("--iters", cluster.iters, "K-means iteration cap")
        ->capture_default_str();
    cluster_cmd->add_option("--method", cluster.method, "kmeans or random")
        ->check(CLI::IsMember({"kmeans", "random"}))
        ->capture_default_str();
    cluster_cmd->add_option("--sample-cap", cluster.sample_cap,
                            "Subsample this many samples before clustering (0 = off)")
        ->capture_default_str();
    cluster_cmd->add_option("--output", cluster.output)->capture_default_str();

    LabelsCmd labels;
    auto* labels_cmd = app.add_subcommand("labels", "Dump k-NN positive pairs as CSV");
    labels_cmd->add_option("--input", labels.input)->required();
    labels_cmd->add_option("--k", labels.k)->capture_default_str();
    labels_cmd->add_option("--threads", labels.threads)->capture_default_str();
    labels_cmd->add_option("--output", labels.output)->capture_default_str();

    TrainBpbCmd train_bpb;
    auto* train_bpb_cmd = app.add_subcommand("train-bpb", "Train the linear projection bank");
    train_bpb_cmd->add_option("--input", train_bpb.input)->required();
    train_bpb_cmd->add_option("--partition", train_bpb.partition_path)->required();
    train_bpb_cmd->add_option("--k", train_bpb.k, "Neighbors for pseudo-labels")
        ->capture_default_str();
    train_bpb.trainer.attach(train_bpb_cmd);
    train_bpb_cmd->add_option("--threads", train_bpb.threads)->capture_default_str();
    train_bpb_cmd->add_option("--output", train_bpb.output)->capture_default_str();

    TrainKbpbCmd train_kbpb;
    auto* train_kbpb_cmd = app.add_subcommand("train-kbpb", "Train the kernelized bank");
    train_kbpb_cmd->add_option("--input", train_kbpb.input)->required();
    train_kbpb_cmd->add_option("--partition", train_kbpb.partition_path)->required();
    train_kbpb_cmd->add_option("--k", train_kbpb.k)->capture_default_str();
    train_kbpb_cmd->add_option("--kernel", train_kbpb.kernel)
        ->check(CLI::IsMember({"poly", "rbf"}))
        ->capture_default_str();
    train_kbpb_cmd->add_option("--tau", train_kbpb.tau, "Polynomial degree")
        ->capture_default_str();
    train_kbpb_cmd->add_option("--sigma", train_kbpb.sigma, "RBF bandwidth or 'auto'")
        ->capture_default_str();
    train_kbpb_cmd->add_option("--n-basis", train_kbpb.n_basis)->capture_default_str();
    train_kbpb_cmd->add_flag("--mu-full-n", train_kbpb.mu_full_n,
                             "Normalize mu by the full training count instead of the basis count");
    train_kbpb.trainer.attach(train_kbpb_cmd);
    train_kbpb_cmd->add_option("--threads", train_kbpb.threads)->capture_default_str();
    train_kbpb_cmd->add_option("--output", train_kbpb.output)->capture_default_str();

    EncodeCmd encode;
    auto* encode_cmd = app.add_subcommand("encode", "Encode features with a trained bank");
    encode_cmd->add_option("--bank", encode.bank_path)->required();
    encode_cmd->add_option("--input", encode.input)->required();
    encode_cmd->add_option("--threads", encode.threads)->capture_default_str();
    encode_cmd->add_option("--output", encode.output)->capture_default_str();

    EncodeBaselineCmd baseline;
    auto* baseline_cmd = app.add_subcommand("encode-baseline", "Encode with a baseline method");
    baseline_cmd->add_option("baseline", baseline.baseline, "sign, lsh, or randst-bpb")
        ->required()
        ->check(CLI::IsMember({"sign", "lsh", "randst-bpb"}));
    baseline_cmd->add_option("--input", baseline.input)->required();
    baseline_cmd->add_option("--train", baseline.train, "Training features (randst-bpb)");
    baseline_cmd->add_option("--d", baseline.d, "Code bits (lsh, randst-bpb)")
        ->capture_default_str();
    baseline_cmd->add_option("--k", baseline.k)->capture_default_str();
    baseline.trainer.attach(baseline_cmd);
    baseline_cmd->add_option("--threads", baseline.threads)->capture_default_str();
    baseline_cmd->add_option("--save-bank", baseline.save_bank,
                             "Also write the learned bank (randst-bpb)");
    baseline_cmd->add_option("--output", baseline.output)->capture_default_str();

    SearchCmd search;
    auto* search_cmd = app.add_subcommand("search", "Hamming top-k search over code files");
    search_cmd->add_option("--gallery", search.gallery)->required();
    search_cmd->add_option("--queries", search.queries)->required();
    search_cmd->add_option("--k", search.k)->capture_default_str();
    search_cmd->add_option("--threads", search.threads)->capture_default_str();
    search_cmd->add_option("--output", search.output)->capture_default_str();

    EvalCmd eval;
    auto* eval_cmd = app.add_subcommand("eval", "Precision@k and precision-recall metrics");
    eval_cmd->add_option("--gallery", eval.gallery)->required();
    eval_cmd->add_option("--queries", eval.queries)->required();
    eval_cmd->add_option("--gallery-labels", eval.gallery_labels)->required();
    eval_cmd->add_option("--query-labels", eval.query_labels)->required();
    eval_cmd->add_option("--k", eval.k_values, "Precision cutoffs (repeatable)")
        ->capture_default_str();
    eval_cmd->add_option("--method", eval.method, "Method name for the CSV rows")
        ->capture_default_str();
    eval_cmd->add_option("--threads", eval.threads)->capture_default_str();
    eval_cmd->add_option("--output", eval.output, "Output directory")->capture_default_str();

    DiagCmd diag;
    auto* diag_cmd =
        app.add_subcommand("diag", "Per-subspace vs full-space pairwise-error diagnostic");
    diag_cmd->add_option("--input", diag.input)->required();
    diag_cmd->add_option("--d", diag.d_values, "Subspace counts (repeatable)")
        ->capture_default_str();
    diag_cmd->add_option("--k", diag.k)->capture_default_str();
    diag.trainer.attach(diag_cmd);
    diag_cmd->add_option("--cluster-iters", diag.cluster_iters)->capture_default_str();
    diag_cmd->add_option("--threads", diag.threads)->capture_default_str();
    diag_cmd->add_option("--output", diag.output, "Output directory")->capture_default_str();

    BenchCmd bench;
    auto* bench_cmd = app.add_subcommand("bench", "End-to-end synthetic benchmark");
    bench_cmd->add_option("--clusters", bench.clusters)->capture_default_str();
    bench_cmd->add_option("--per", bench.per)->capture_default_str();
    bench_cmd->add_option("--dims", bench.dims)->capture_default_str();
    bench_cmd->add_option("--noise", bench.noise)->capture_default_str();
    bench_cmd->add_option("--d", bench.d)->capture_default_str();
    bench_cmd->add_option("--k", bench.k)->capture_default_str();
    bench_cmd->add_option("--lambda", bench.lambdas, "Hinge weights to sweep (repeatable)")
        ->capture_default_str();
    bench_cmd->add_option("--k-eval", bench.k_eval, "Precision cutoffs (repeatable)")
        ->capture_default_str();
    bench_cmd->add_option("--methods", bench.methods,
                          "Methods: bpb, randst-bpb, sign, lsh, kbpb (repeatable)")
        ->capture_default_str();
    bench_cmd->add_option("--kernel", bench.kernel)
        ->check(CLI::IsMember({"poly", "rbf"}))
        ->capture_default_str();
    bench_cmd->add_option("--tau", bench.tau)->capture_default_str();
    bench_cmd->add_option("--sigma", bench.sigma)->capture_default_str();
    bench_cmd->add_option("--n-basis", bench.n_basis)->capture_default_str();
    bench.trainer.attach(bench_cmd, /*include_lambda=*/false);
    bench_cmd->add_option("--threads", bench.threads)->capture_default_str();
    bench_cmd->add_option("--output", bench.output, "Output directory")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (gen_cmd->parsed()) return gen.run();
        if (cluster_cmd->parsed()) return cluster.run();
        if (labels_cmd->parsed()) return labels.run();
        if (train_bpb_cmd->parsed()) return train_bpb.run();
        if (train_kbpb_cmd->parsed()) return train_kbpb.run();
        if (encode_cmd->parsed()) return encode.run();
        if (baseline_cmd->parsed()) return baseline.run();
        if (search_cmd->parsed()) return search.run();
        if (eval_cmd->parsed()) return eval.run();
        if (diag_cmd->parsed()) return diag.run();
        if (bench_cmd->parsed()) return bench.run();
    } catch (const pbank::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDataError;
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << e.what() << "\n";
        return kExitDataError;
    }
    return kExitUsage;
}

int main(int argc, char** argv) { return run(argc, argv); }
