#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "nnsa/experiments.hpp"

using namespace nnsa;
namespace fs = std::filesystem;

namespace {

ExperimentConfig tiny_comparison_config() {
    ExperimentConfig cfg;
    cfg.study = Study::SparseApproxComparison;
    cfg.model = DataModel::Rect;
    cfg.m = 10;
    cfg.n = 20;
    cfg.s = 2;
    cfg.n_instances = 8;
    cfg.master_seed = 99;
    cfg.snr_db_list = {40.0};
    cfg.m_list = {10, 15};
    cfg.solver.n_alphas = 12;
    return cfg;
}

std::string records_csv(Study study, const StudyResult& result) {
    std::stringstream ss;
    write_records_csv(ss, study, result.records, false);
    return ss.str();
}

std::string aggregates_csv(Study study, const StudyResult& result) {
    std::stringstream ss;
    write_aggregates_csv(ss, study, result.aggregates);
    return ss.str();
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

fs::path temp_dir(const char* tag) {
    const fs::path dir = fs::temp_directory_path() / (std::string("nnsa_test_") + tag);
    fs::remove_all(dir);
    return dir;
}

}  // namespace

TEST_CASE("identical configs produce byte-identical tables") {
    const ExperimentConfig cfg = tiny_comparison_config();
    const StudyResult a = run_study(cfg);
    const StudyResult b = run_study(cfg);
    CHECK(records_csv(cfg.study, a) == records_csv(cfg.study, b));
    CHECK(aggregates_csv(cfg.study, a) == aggregates_csv(cfg.study, b));
}

TEST_CASE("thread count does not change the output") {
    ExperimentConfig cfg = tiny_comparison_config();
    cfg.threads = 1;
    const StudyResult serial = run_study(cfg);
    cfg.threads = 4;
    const StudyResult parallel = run_study(cfg);
    CHECK(records_csv(cfg.study, serial) == records_csv(cfg.study, parallel));
    CHECK(aggregates_csv(cfg.study, serial) == aggregates_csv(cfg.study, parallel));
}

TEST_CASE("aggregates recomputed from the per-instance CSV match the emitted table") {
    const ExperimentConfig cfg = tiny_comparison_config();
    const StudyResult result = run_study(cfg);

    // parse the per-instance CSV back into records
    std::stringstream ss(records_csv(cfg.study, result));
    std::string line;
    std::getline(ss, line);
    const std::vector<std::string> header = split(line, ',');
    std::map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;

    std::vector<McRecord> parsed;
    while (std::getline(ss, line)) {
        const auto f = split(line, ',');
        McRecord rec;
        rec.point.model = f[col["model"]] == "rect" ? DataModel::Rect : DataModel::Gaussian;
        rec.point.m = std::stoul(f[col["M"]]);
        rec.point.n = std::stoul(f[col["N"]]);
        rec.point.s = std::stoul(f[col["s"]]);
        rec.point.snr_db = std::stod(f[col["snr_db"]]);
        rec.point.prune_ratio = std::stod(f[col["prune_ratio"]]);
        rec.instance = std::stoul(f[col["instance"]]);
        rec.solver = f[col["solver"]] == kSolverDyn ? kSolverDyn : kSolverNnbpdn;
        rec.converged = f[col["converged"]] == "1";
        rec.kkt_total = std::stod(f[col["kkt_total"]]);
        rec.switches = std::stoull(f[col["switches"]]);
        rec.metrics.rel_err_support = std::stod(f[col["rel_err_support"]]);
        rec.metrics.mse_support = std::stod(f[col["mse_support"]]);
        rec.metrics.output_snr = std::stod(f[col["output_snr"]]);
        rec.metrics.support_recovered = f[col["support_recovered"]] == "1";
        parsed.push_back(rec);
    }
    REQUIRE(parsed.size() == result.records.size());

    const std::vector<AggregateRow> recomputed = aggregate_records(parsed);
    REQUIRE(recomputed.size() == result.aggregates.size());
    for (std::size_t i = 0; i < recomputed.size(); ++i) {
        const AggregateRow& a = recomputed[i];
        const AggregateRow& b = result.aggregates[i];
        CHECK(a.n == b.n);
        CHECK(std::abs(a.mean_rel_err_support - b.mean_rel_err_support) <= 1e-12);
        CHECK(std::abs(a.mean_mse_support - b.mean_mse_support) <= 1e-12);
        CHECK(std::abs(a.support_recovery_fraction - b.support_recovery_fraction) <= 1e-12);
        if (std::isfinite(b.mean_output_snr)) {
            CHECK(std::abs(a.mean_output_snr - b.mean_output_snr) <=
                  1e-12 * std::max(1.0, std::abs(b.mean_output_snr)));
        }
    }
}

TEST_CASE("dynamical rows carry a certified residual or a non-converged flag") {
    const ExperimentConfig cfg = tiny_comparison_config();
    const StudyResult result = run_study(cfg);
    for (const McRecord& rec : result.records) {
        if (rec.solver == kSolverDyn && rec.converged) {
            CHECK(rec.kkt_total <= cfg.solver.kkt_tol);
        }
    }
}

TEST_CASE("pruning at ratio zero reproduces the olfactory rows") {
    ExperimentConfig olf;
    olf.study = Study::OlfactorySnrSweep;
    olf.m = olf.n = 15;
    olf.s = 2;
    olf.n_instances = 6;
    olf.master_seed = 5;
    olf.snr_db_list = {40.0};
    const StudyResult base = run_olfactory(olf);

    ExperimentConfig pr = olf;
    pr.study = Study::PruningSweep;
    pr.prune_ratios = {0.0, 0.4};
    const StudyResult pruned = run_pruning(pr);

    REQUIRE(base.records.size() == 6);
    REQUIRE(pruned.records.size() == 12);
    for (std::size_t k = 0; k < 6; ++k) {
        const McRecord& a = base.records[k];
        const McRecord& b = pruned.records[k];  // ratio 0 block comes first
        CHECK(b.point.prune_ratio == 0.0);
        CHECK(b.seed == a.seed);
        CHECK(b.metrics.rel_err_support == a.metrics.rel_err_support);
        CHECK(b.metrics.output_snr == a.metrics.output_snr);
        CHECK(b.switches == a.switches);
    }
    // the pruned block differs (degraded system)
    bool any_difference = false;
    for (std::size_t k = 0; k < 6; ++k) {
        if (pruned.records[6 + k].metrics.rel_err_support !=
            base.records[k].metrics.rel_err_support) {
            any_difference = true;
        }
    }
    CHECK(any_difference);
}

TEST_CASE("instance seeds ignore the pruning ratio but track data coordinates") {
    SweepPoint a{DataModel::Rect, 20, 40, 3, 40.0, 0.0};
    SweepPoint b = a;
    b.prune_ratio = 0.7;
    CHECK(instance_seed(1, a, 4) == instance_seed(1, b, 4));
    SweepPoint c = a;
    c.s = 4;
    CHECK(instance_seed(1, a, 4) != instance_seed(1, c, 4));
    CHECK(instance_seed(1, a, 4) != instance_seed(2, a, 4));
    CHECK(instance_seed(1, a, 4) != instance_seed(1, a, 5));
}

TEST_CASE("CLI writes the two CSV files and reports success") {
    const fs::path dir = temp_dir("cli");
    const std::string out = dir.string();
    const char* argv[] = {"nnsa-mc", "--study",  "sparse-comparison", "--n",   "4",
                          "--m",     "8",        "--nn",              "16",    "--s",
                          "2",       "--snr-db", "40",                "--seed", "7",
                          "--alphas", "8",       "--out",             out.c_str()};
    const int rc = cli_main(static_cast<int>(std::size(argv)), argv);
    CHECK(rc == 0);
    CHECK(fs::exists(dir / "sparse_comparison_instances.csv"));
    CHECK(fs::exists(dir / "sparse_comparison_aggregate.csv"));
    fs::remove_all(dir);
}

TEST_CASE("CLI --help succeeds") {
    const char* argv[] = {"nnsa-mc", "--help"};
    CHECK(cli_main(2, argv) == 0);
}

TEST_CASE("CLI rejects unknown flags and unknown studies") {
    {
        const char* argv[] = {"nnsa-mc", "--study", "olfactory", "--bogus", "1"};
        CHECK(cli_main(5, argv) == 2);
    }
    {
        const char* argv[] = {"nnsa-mc", "--study", "nonsense"};
        CHECK(cli_main(3, argv) == 2);
    }
}

TEST_CASE("CLI reports an unreadable config file") {
    const char* argv[] = {"nnsa-mc", "--study", "olfactory", "--config", "/nonexistent/x.cfg"};
    CHECK(cli_main(5, argv) == 3);
}

TEST_CASE("CLI desk preset exists and fills defaults") {
    const fs::path dir = temp_dir("preset");
    const std::string out = dir.string();
    // preset defaults apply to everything the flags leave unset; the tiny
    // instance count keeps this test fast while N = 50 comes from the preset
    const char* argv[] = {"nnsa-mc",    "--study", "olfactory", "--preset", "paper-desk",
                          "--n",        "2",       "--snr-list", "40",      "--s-list",
                          "1",          "--out",   out.c_str()};
    const int rc = cli_main(static_cast<int>(std::size(argv)), argv);
    CHECK(rc == 0);
    std::ifstream is(dir / "olfactory_instances.csv");
    REQUIRE(is.good());
    std::string header, row;
    std::getline(is, header);
    std::getline(is, row);
    const auto fields = split(row, ',');
    CHECK(fields[3] == "50");  // N from the preset
    fs::remove_all(dir);
}

TEST_CASE("CLI config file mirrors the flags") {
    const fs::path dir = temp_dir("cfgfile");
    fs::create_directories(dir);
    const fs::path cfg_path = dir / "run.cfg";
    {
        std::ofstream os(cfg_path);
        os << "study=olfactory\n"
           << "nn=12\nm=12\ns=2\nn=3\nseed=11\nsnr-db=40\n"
           << "out=" << (dir / "results").string() << "\n";
    }
    const std::string cfg_str = cfg_path.string();
    const char* argv[] = {"nnsa-mc", "--config", cfg_str.c_str()};
    CHECK(cli_main(3, argv) == 0);
    CHECK(fs::exists(dir / "results" / "olfactory_instances.csv"));
    fs::remove_all(dir);
}

TEST_CASE("a near-noiseless sweep point recovers the signal almost exactly") {
    ExperimentConfig cfg;
    cfg.study = Study::OlfactorySnrSweep;
    cfg.m = cfg.n = 20;
    cfg.s = 2;
    cfg.n_instances = 20;
    cfg.master_seed = 17;
    // the recovery error tracks the input noise (~10^(-snr/20) relative), so
    // "noise-free" needs a very high SNR point and a matching solver tolerance
    cfg.snr_db_list = {140.0};
    cfg.solver.kkt_tol = 1e-10;
    const StudyResult result = run_olfactory(cfg);
    REQUIRE(result.aggregates.size() == 1);
    CHECK(result.aggregates[0].mean_rel_err_support < 1e-6);
}

TEST_CASE("the Gaussian data model underperforms the rect model") {
    ExperimentConfig cfg;
    cfg.study = Study::ModelComparison;
    cfg.m = 20;
    cfg.n = 40;
    cfg.s = 3;
    cfg.n_instances = 40;
    cfg.master_seed = 23;
    cfg.snr_db_list = {40.0};
    cfg.solver.n_alphas = 12;
    const StudyResult result = run_sparse_comparison(cfg);
    const AggregateRow* rect = nullptr;
    const AggregateRow* gauss = nullptr;
    for (const auto& row : result.aggregates) {
        if (std::string_view(row.solver) != kSolverDyn) continue;
        (row.point.model == DataModel::Rect ? rect : gauss) = &row;
    }
    REQUIRE(rect != nullptr);
    REQUIRE(gauss != nullptr);
    CHECK(gauss->mean_mse_support > rect->mean_mse_support);
}

TEST_CASE("timing columns appear only on request") {
    ExperimentConfig cfg = tiny_comparison_config();
    cfg.n_instances = 2;
    cfg.m_list = {10};
    const StudyResult result = run_study(cfg);
    std::stringstream plain, timed;
    write_records_csv(plain, cfg.study, result.records, false);
    write_records_csv(timed, cfg.study, result.records, true);
    std::string header;
    std::getline(plain, header);
    CHECK(header.find("wall_ms") == std::string::npos);
    std::getline(timed, header);
    CHECK(header.find(",wall_ms") != std::string::npos);
}

TEST_CASE("the exact integrator is reachable through the experiment config") {
    ExperimentConfig cfg;
    cfg.study = Study::OlfactorySnrSweep;
    cfg.m = cfg.n = 12;
    cfg.s = 2;
    cfg.n_instances = 4;
    cfg.master_seed = 31;
    cfg.snr_db_list = {40.0};
    cfg.solver.integrator = IntegratorKind::ExactSubsystem;
    const StudyResult result = run_olfactory(cfg);
    for (const McRecord& rec : result.records) {
        CHECK(rec.converged);
        CHECK(rec.kkt_total <= cfg.solver.kkt_tol);
    }
}

TEST_CASE("the thread-count environment variable is honored") {
    const fs::path dir = temp_dir("envthreads");
    const std::string out = dir.string();
    setenv("NNSA_THREADS", "2", 1);
    const char* argv[] = {"nnsa-mc", "--study", "olfactory", "--nn", "10", "--s", "2",
                          "--n",     "3",       "--snr-db",  "40",   "--out", out.c_str()};
    const int rc = cli_main(static_cast<int>(std::size(argv)), argv);
    unsetenv("NNSA_THREADS");
    CHECK(rc == 0);
    CHECK(fs::exists(dir / "olfactory_instances.csv"));
    fs::remove_all(dir);
}

TEST_CASE("a run with an impossible step budget aborts with exit code 5") {
    const char* argv[] = {"nnsa-mc", "--study", "olfactory", "--nn", "12", "--s", "2",
                          "--n",     "4",       "--snr-db",  "40",   "--max-steps", "1"};
    CHECK(cli_main(static_cast<int>(std::size(argv)), argv) == 5);
}
