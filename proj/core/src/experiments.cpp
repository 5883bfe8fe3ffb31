#include "nnsa/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <ostream>
#include <thread>

#include "CLI11.hpp"
#include "nnsa/detail/format.hpp"
#include "nnsa/rng.hpp"
#include "nnsa/solvers.hpp"

namespace nnsa {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

class OutputWriteError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

DataModelSpec spec_for(const SweepPoint& pt) {
    return pt.model == DataModel::Rect ? DataModelSpec::rect(pt.m, pt.n, pt.s, pt.snr_db)
                                       : DataModelSpec::gaussian(pt.m, pt.n, pt.s, pt.snr_db);
}

McRecord blank_record(const SweepPoint& pt, std::size_t instance, std::uint64_t seed,
                      const char* solver) {
    McRecord rec;
    rec.point = pt;
    rec.instance = instance;
    rec.seed = seed;
    rec.solver = solver;
    rec.converged = false;
    rec.kkt_total = kNaN;
    rec.metrics = {kNaN, kNaN, kNaN, false};
    rec.best_alpha = kNaN;
    return rec;
}

void fill_dyn_row(McRecord& rec, const SolverConfig& sc, const RealMatrix& a,
                  const Instance& inst) {
    DiscSystem sys = DiscSystem::build(a, inst.y);
    SolverOptions opts;
    opts.kkt_tol = sc.kkt_tol;
    opts.max_time = sc.max_time;
    opts.max_steps = sc.max_steps;
    opts.integrator = sc.integrator;
    opts.record_states = false;
    auto [res, traj] = solve(sys, RealVector(sys.state_dim(), 0.0), opts);
    rec.converged = res.converged;
    rec.kkt_total = res.kkt_residual;
    rec.switches = res.switches;
    rec.steps = res.steps;
    rec.metrics = evaluate_recovery(res.x_eq, inst.x0, inst.support);
    rec.wall_ms = res.wall_time_s * 1e3;
}

void fill_nnbpdn_row(McRecord& rec, const SolverConfig& sc, const RealMatrix& a,
                     const Instance& inst) {
    const auto t0 = std::chrono::steady_clock::now();
    const NnbpdnPath path =
        nnbpdn_path(a, inst.y, sc.n_alphas, ProxOptions{sc.prox_tol, sc.prox_max_iters});

    // oracle selection: smallest full-vector MSE against the true signal
    std::size_t best = 0;
    double best_mse = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < path.solutions.size(); ++k) {
        double acc = 0.0;
        const RealVector& xk = path.solutions[k];
        for (std::size_t i = 0; i < xk.size(); ++i) {
            const double d = xk[i] - inst.x0[i];
            acc += d * d;
        }
        if (acc < best_mse) {
            best_mse = acc;
            best = k;
        }
    }
    const RealVector& x = path.solutions[best];
    const double alpha = path.alphas[best];

    // fixed-point residual of the projected proximal map at the chosen alpha
    RealVector residual = matvec(a, x);
    for (std::size_t i = 0; i < residual.size(); ++i) residual[i] -= inst.y[i];
    const RealVector grad = matvec_transposed(a, residual);
    double fp_residual = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        fp_residual = std::max(fp_residual, std::abs(x[i] - std::max(0.0, x[i] - (grad[i] + alpha))));
    }

    rec.converged = !path.hit_cap[best];
    rec.kkt_total = fp_residual;
    rec.best_alpha = alpha;
    rec.metrics = evaluate_recovery(x, inst.x0, inst.support);
    rec.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

StudyResult finalize(const ExperimentConfig& cfg, Study study, std::vector<McRecord> records,
                     std::size_t instances_total, std::size_t negative_entries) {
    StudyResult result;
    result.records = std::move(records);
    result.negative_matrix_entries = negative_entries;

    std::size_t failed_rows = 0;
    std::vector<bool> instance_failed(instances_total, false);
    std::size_t per_instance_rows = result.records.size() / std::max<std::size_t>(1, instances_total);
    for (std::size_t r = 0; r < result.records.size(); ++r) {
        if (!result.records[r].converged) {
            ++failed_rows;
            if (per_instance_rows > 0) instance_failed[r / per_instance_rows] = true;
        }
    }
    result.failed_rows = failed_rows;
    const std::size_t failed_instances =
        static_cast<std::size_t>(std::count(instance_failed.begin(), instance_failed.end(), true));
    if (instances_total > 0 && failed_instances * 10 > instances_total) {
        throw StudyAbortedError("study aborted: " + std::to_string(failed_instances) + " of " +
                                std::to_string(instances_total) + " instances failed");
    }

    result.aggregates = aggregate_records(result.records);

    if (!cfg.out_dir.empty()) {
        namespace fs = std::filesystem;
        std::error_code ec;
        fs::create_directories(cfg.out_dir, ec);
        if (ec) throw OutputWriteError("cannot create output directory " + cfg.out_dir);
        std::string tag = to_string(study);
        std::replace(tag.begin(), tag.end(), '-', '_');
        const fs::path inst_path = fs::path(cfg.out_dir) / (tag + "_instances.csv");
        const fs::path agg_path = fs::path(cfg.out_dir) / (tag + "_aggregate.csv");
        std::ofstream inst_os(inst_path);
        if (!inst_os) throw OutputWriteError("cannot write " + inst_path.string());
        write_records_csv(inst_os, study, result.records, cfg.emit_timings);
        std::ofstream agg_os(agg_path);
        if (!agg_os) throw OutputWriteError("cannot write " + agg_path.string());
        write_aggregates_csv(agg_os, study, result.aggregates);
        result.output_files = {inst_path.string(), agg_path.string()};
    }
    return result;
}

std::vector<double> default_ratios() {
    std::vector<double> r;
    for (int i = 0; i <= 9; ++i) r.push_back(static_cast<double>(i) / 10.0);
    return r;
}

}  // namespace

const char* to_string(Study study) noexcept {
    switch (study) {
        case Study::OlfactorySnrSweep: return "olfactory";
        case Study::PruningSweep: return "pruning";
        case Study::SparseApproxComparison: return "sparse-comparison";
        case Study::SparsitySweep: return "sparsity-sweep";
        case Study::ModelComparison: return "model-comparison";
    }
    return "?";
}

std::optional<Study> study_from_name(std::string_view name) noexcept {
    for (Study s : {Study::OlfactorySnrSweep, Study::PruningSweep, Study::SparseApproxComparison,
                    Study::SparsitySweep, Study::ModelComparison}) {
        if (name == to_string(s)) return s;
    }
    return std::nullopt;
}

std::uint64_t instance_seed(std::uint64_t master_seed, const SweepPoint& point,
                            std::size_t instance) noexcept {
    // pruning ratio deliberately left out: pruned sweeps reuse instances
    std::uint64_t key = mix64(static_cast<std::uint64_t>(point.model), point.m);
    key = mix64(key, point.n);
    key = mix64(key, point.s);
    key = mix64(key, static_cast<std::uint64_t>(std::llround(point.snr_db * 1e6)));
    return mix64(mix64(master_seed, key), instance);
}

void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& fn) {
    if (count == 0) return;
    std::size_t t = threads != 0 ? threads : std::max(1u, std::thread::hardware_concurrency());
    t = std::min(t, count);
    if (t <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex err_mutex;
    std::exception_ptr first_error;
    auto worker = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                fn(i);
            } catch (...) {
                {
                    const std::lock_guard<std::mutex> lock(err_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
                next.store(count);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(t - 1);
    for (std::size_t i = 0; i + 1 < t; ++i) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

StudyResult run_olfactory(const ExperimentConfig& cfg) {
    if (cfg.m != cfg.n) throw std::invalid_argument("run_olfactory: requires a square system");
    if (cfg.snr_db_list.empty() || cfg.n_instances == 0) {
        throw std::invalid_argument("run_olfactory: empty sweep");
    }
    const std::vector<std::size_t> s_list = cfg.s_list.empty() ? std::vector{cfg.s} : cfg.s_list;

    std::vector<SweepPoint> points;
    for (double snr : cfg.snr_db_list) {
        for (std::size_t s : s_list) points.push_back({cfg.model, cfg.n, cfg.n, s, snr, 0.0});
    }
    std::vector<McRecord> records(points.size() * cfg.n_instances);
    std::atomic<std::size_t> neg_entries{0};
    parallel_for(records.size(), cfg.threads, [&](std::size_t idx) {
        const SweepPoint& pt = points[idx / cfg.n_instances];
        const std::size_t k = idx % cfg.n_instances;
        const std::uint64_t seed = instance_seed(cfg.master_seed, pt, k);
        McRecord rec = blank_record(pt, k, seed, kSolverDyn);
        try {
            const Instance inst = generate(spec_for(pt), seed);
            neg_entries += inst.negative_matrix_entries;
            fill_dyn_row(rec, cfg.solver, inst.a, inst);
        } catch (const std::exception&) {
            // recorded as a failed instance, not fatal
        }
        records[idx] = std::move(rec);
    });
    return finalize(cfg, Study::OlfactorySnrSweep, std::move(records),
                    points.size() * cfg.n_instances, neg_entries.load());
}

StudyResult run_pruning(const ExperimentConfig& cfg) {
    if (cfg.m != cfg.n) throw std::invalid_argument("run_pruning: requires a square system");
    const std::vector<double> ratios =
        cfg.prune_ratios.empty() ? default_ratios() : cfg.prune_ratios;
    for (double r : ratios) {
        if (!(r >= 0.0 && r <= 0.9)) throw std::invalid_argument("run_pruning: ratio outside [0, 0.9]");
    }
    const std::vector<std::size_t> s_list = cfg.s_list.empty() ? std::vector{cfg.s} : cfg.s_list;

    std::vector<SweepPoint> data_points;
    for (double snr : cfg.snr_db_list) {
        for (std::size_t s : s_list) data_points.push_back({cfg.model, cfg.n, cfg.n, s, snr, 0.0});
    }
    const std::size_t n_ratios = ratios.size();
    std::vector<McRecord> records(data_points.size() * n_ratios * cfg.n_instances);
    std::atomic<std::size_t> neg_entries{0};

    parallel_for(data_points.size() * cfg.n_instances, cfg.threads, [&](std::size_t task) {
        const std::size_t dp = task / cfg.n_instances;
        const std::size_t k = task % cfg.n_instances;
        const SweepPoint& base_pt = data_points[dp];
        const std::uint64_t seed = instance_seed(cfg.master_seed, base_pt, k);

        std::optional<Instance> inst;
        try {
            inst = generate(spec_for(base_pt), seed);
            neg_entries += inst->negative_matrix_entries;
        } catch (const std::exception&) {
        }
        for (std::size_t rk = 0; rk < n_ratios; ++rk) {
            SweepPoint pt = base_pt;
            pt.prune_ratio = ratios[rk];
            McRecord rec = blank_record(pt, k, seed, kSolverDyn);
            if (inst) {
                try {
                    const RealMatrix pruned = prune(inst->a, ratios[rk]);
                    fill_dyn_row(rec, cfg.solver, pruned, *inst);
                } catch (const std::exception&) {
                }
            }
            records[(dp * n_ratios + rk) * cfg.n_instances + k] = std::move(rec);
        }
    });
    return finalize(cfg, Study::PruningSweep, std::move(records),
                    data_points.size() * n_ratios * cfg.n_instances, neg_entries.load());
}

StudyResult run_sparse_comparison(const ExperimentConfig& cfg) {
    if (cfg.snr_db_list.empty() || cfg.n_instances == 0) {
        throw std::invalid_argument("run_sparse_comparison: empty sweep");
    }
    std::vector<SweepPoint> points;
    switch (cfg.study) {
        case Study::SparsitySweep: {
            const auto s_list = cfg.s_list.empty() ? std::vector{cfg.s} : cfg.s_list;
            for (double snr : cfg.snr_db_list) {
                for (std::size_t s : s_list) points.push_back({cfg.model, cfg.m, cfg.n, s, snr, 0.0});
            }
            break;
        }
        case Study::ModelComparison: {
            for (double snr : cfg.snr_db_list) {
                for (DataModel model : {DataModel::Rect, DataModel::Gaussian}) {
                    points.push_back({model, cfg.m, cfg.n, cfg.s, snr, 0.0});
                }
            }
            break;
        }
        case Study::SparseApproxComparison:
        default: {
            const auto m_list = cfg.m_list.empty() ? std::vector{cfg.m} : cfg.m_list;
            for (double snr : cfg.snr_db_list) {
                for (std::size_t m : m_list) points.push_back({cfg.model, m, cfg.n, cfg.s, snr, 0.0});
            }
            break;
        }
    }

    std::vector<McRecord> records(points.size() * cfg.n_instances * 2);
    std::atomic<std::size_t> neg_entries{0};
    parallel_for(points.size() * cfg.n_instances, cfg.threads, [&](std::size_t task) {
        const SweepPoint& pt = points[task / cfg.n_instances];
        const std::size_t k = task % cfg.n_instances;
        const std::uint64_t seed = instance_seed(cfg.master_seed, pt, k);
        McRecord dyn = blank_record(pt, k, seed, kSolverDyn);
        McRecord reg = blank_record(pt, k, seed, kSolverNnbpdn);
        try {
            const Instance inst = generate(spec_for(pt), seed);
            neg_entries += inst.negative_matrix_entries;
            try {
                fill_dyn_row(dyn, cfg.solver, inst.a, inst);
            } catch (const std::exception&) {
            }
            try {
                fill_nnbpdn_row(reg, cfg.solver, inst.a, inst);
            } catch (const std::exception&) {
            }
        } catch (const std::exception&) {
        }
        records[task * 2] = std::move(dyn);
        records[task * 2 + 1] = std::move(reg);
    });
    const Study study = cfg.study == Study::SparsitySweep || cfg.study == Study::ModelComparison
                            ? cfg.study
                            : Study::SparseApproxComparison;
    return finalize(cfg, study, std::move(records), points.size() * cfg.n_instances,
                    neg_entries.load());
}

StudyResult run_study(const ExperimentConfig& cfg) {
    switch (cfg.study) {
        case Study::OlfactorySnrSweep: return run_olfactory(cfg);
        case Study::PruningSweep: return run_pruning(cfg);
        default: return run_sparse_comparison(cfg);
    }
}

namespace {

struct Accumulator {
    SweepPoint point;
    const char* solver = "";
    std::vector<double> rel_err, mse, snr, kkt, switches;
    std::size_t n = 0, n_converged = 0, recovered = 0, snr_excluded = 0;
};

struct Stat {
    double mean = kNaN;
    double se = kNaN;
};

Stat stat_of(const std::vector<double>& v) {
    std::vector<double> finite;
    finite.reserve(v.size());
    for (double x : v) {
        if (std::isfinite(x)) finite.push_back(x);
    }
    if (finite.empty()) return {};
    double mean = 0.0;
    for (double x : finite) mean += x;
    mean /= static_cast<double>(finite.size());
    if (finite.size() < 2) return {mean, 0.0};
    double var = 0.0;
    for (double x : finite) var += (x - mean) * (x - mean);
    var /= static_cast<double>(finite.size() - 1);
    return {mean, std::sqrt(var / static_cast<double>(finite.size()))};
}

bool same_point(const SweepPoint& a, const SweepPoint& b) {
    return a.model == b.model && a.m == b.m && a.n == b.n && a.s == b.s && a.snr_db == b.snr_db &&
           a.prune_ratio == b.prune_ratio;
}

}  // namespace

std::vector<AggregateRow> aggregate_records(const std::vector<McRecord>& records) {
    std::vector<Accumulator> groups;
    for (const McRecord& rec : records) {
        Accumulator* acc = nullptr;
        for (auto& g : groups) {
            if (same_point(g.point, rec.point) && std::strcmp(g.solver, rec.solver) == 0) {
                acc = &g;
                break;
            }
        }
        if (!acc) {
            groups.push_back({});
            acc = &groups.back();
            acc->point = rec.point;
            acc->solver = rec.solver;
        }
        ++acc->n;
        if (rec.converged) ++acc->n_converged;
        if (rec.metrics.support_recovered) ++acc->recovered;
        acc->rel_err.push_back(rec.metrics.rel_err_support);
        acc->mse.push_back(rec.metrics.mse_support);
        if (std::isfinite(rec.metrics.output_snr)) acc->snr.push_back(rec.metrics.output_snr);
        else ++acc->snr_excluded;
        acc->kkt.push_back(rec.kkt_total);
        acc->switches.push_back(static_cast<double>(rec.switches));
    }

    std::vector<AggregateRow> rows;
    rows.reserve(groups.size());
    for (const auto& g : groups) {
        AggregateRow row;
        row.point = g.point;
        row.solver = g.solver;
        row.n = g.n;
        row.n_converged = g.n_converged;
        const Stat re = stat_of(g.rel_err);
        row.mean_rel_err_support = re.mean;
        row.se_rel_err_support = re.se;
        const Stat ms = stat_of(g.mse);
        row.mean_mse_support = ms.mean;
        row.se_mse_support = ms.se;
        const Stat sn = stat_of(g.snr);
        row.mean_output_snr = sn.mean;
        row.se_output_snr = sn.se;
        row.mean_output_snr_db = 10.0 * std::log10(sn.mean);
        row.output_snr_excluded = g.snr_excluded;
        row.support_recovery_fraction = g.n > 0 ? static_cast<double>(g.recovered) / g.n : kNaN;
        const Stat sw = stat_of(g.switches);
        row.mean_switches = sw.mean;
        const Stat kk = stat_of(g.kkt);
        row.mean_kkt_total = kk.mean;
        rows.push_back(row);
    }
    return rows;
}

namespace {

void append_point(std::string& out, Study study, const SweepPoint& pt) {
    out += to_string(study);
    out += ',';
    out += to_string(pt.model);
    out += ',';
    detail::append_number(out, static_cast<std::uint64_t>(pt.m));
    out += ',';
    detail::append_number(out, static_cast<std::uint64_t>(pt.n));
    out += ',';
    detail::append_number(out, static_cast<std::uint64_t>(pt.s));
    out += ',';
    detail::append_number(out, pt.snr_db);
    out += ',';
    detail::append_number(out, pt.prune_ratio);
}

}  // namespace

void write_records_csv(std::ostream& os, Study study, const std::vector<McRecord>& records,
                       bool with_timings) {
    std::string out =
        "study,model,M,N,s,snr_db,prune_ratio,instance,seed,solver,converged,kkt_total,switches,"
        "steps,rel_err_support,mse_support,output_snr,support_recovered,best_alpha";
    if (with_timings) out += ",wall_ms";
    out += '\n';
    for (const McRecord& rec : records) {
        append_point(out, study, rec.point);
        out += ',';
        detail::append_number(out, static_cast<std::uint64_t>(rec.instance));
        out += ',';
        detail::append_number(out, rec.seed);
        out += ',';
        out += rec.solver;
        out += ',';
        out += rec.converged ? '1' : '0';
        out += ',';
        detail::append_number(out, rec.kkt_total);
        out += ',';
        detail::append_number(out, rec.switches);
        out += ',';
        detail::append_number(out, rec.steps);
        out += ',';
        detail::append_number(out, rec.metrics.rel_err_support);
        out += ',';
        detail::append_number(out, rec.metrics.mse_support);
        out += ',';
        detail::append_number(out, rec.metrics.output_snr);
        out += ',';
        out += rec.metrics.support_recovered ? '1' : '0';
        out += ',';
        detail::append_number(out, rec.best_alpha);
        if (with_timings) {
            out += ',';
            detail::append_number(out, rec.wall_ms);
        }
        out += '\n';
    }
    os << out;
}

void write_aggregates_csv(std::ostream& os, Study study, const std::vector<AggregateRow>& rows) {
    std::string out =
        "study,model,M,N,s,snr_db,prune_ratio,solver,n,n_converged,mean_rel_err_support,"
        "se_rel_err_support,mean_mse_support,se_mse_support,mean_output_snr,se_output_snr,"
        "mean_output_snr_db,n_output_snr_excluded,support_recovery_fraction,mean_switches,"
        "mean_kkt_total\n";
    for (const AggregateRow& row : rows) {
        append_point(out, study, row.point);
        out += ',';
        out += row.solver;
        out += ',';
        detail::append_number(out, static_cast<std::uint64_t>(row.n));
        out += ',';
        detail::append_number(out, static_cast<std::uint64_t>(row.n_converged));
        out += ',';
        detail::append_number(out, row.mean_rel_err_support);
        out += ',';
        detail::append_number(out, row.se_rel_err_support);
        out += ',';
        detail::append_number(out, row.mean_mse_support);
        out += ',';
        detail::append_number(out, row.se_mse_support);
        out += ',';
        detail::append_number(out, row.mean_output_snr);
        out += ',';
        detail::append_number(out, row.se_output_snr);
        out += ',';
        detail::append_number(out, row.mean_output_snr_db);
        out += ',';
        detail::append_number(out, static_cast<std::uint64_t>(row.output_snr_excluded));
        out += ',';
        detail::append_number(out, row.support_recovery_fraction);
        out += ',';
        detail::append_number(out, row.mean_switches);
        out += ',';
        detail::append_number(out, row.mean_kkt_total);
        out += '\n';
    }
    os << out;
}

// ---------------------------------------------------------------------------
// CLI
// ---------------------------------------------------------------------------

namespace {

void apply_preset(const CLI::App& app, const std::string& preset, ExperimentConfig& cfg) {
    const bool paper = preset == "paper";
    auto unset = [&](const std::string& flag) { return app.count(flag) == 0; };
    const std::size_t desk_instances = 200;
    const std::size_t paper_instances = 5000;

    if (unset("--n")) cfg.n_instances = paper ? paper_instances : desk_instances;
    switch (cfg.study) {
        case Study::OlfactorySnrSweep:
        case Study::PruningSweep: {
            const std::size_t n = paper ? 200 : 50;
            if (unset("--nn")) cfg.n = n;
            if (unset("--m")) cfg.m = cfg.n;
            if (unset("--s-list") && unset("--s")) {
                cfg.s_list = cfg.study == Study::PruningSweep ? std::vector<std::size_t>{1, 3, 5}
                                                              : std::vector<std::size_t>{1, 3, 5, 10};
            }
            if (unset("--snr-list") && unset("--snr-db")) {
                cfg.snr_db_list = cfg.study == Study::PruningSweep
                                      ? std::vector<double>{40.0}
                                      : std::vector<double>{0, 10, 20, 30, 40, 50, 60};
            }
            break;
        }
        case Study::SparseApproxComparison: {
            if (unset("--nn")) cfg.n = paper ? 200 : 100;
            if (unset("--m-list") && unset("--m")) {
                cfg.m_list = paper ? std::vector<std::size_t>{25, 50, 75, 100, 150}
                                   : std::vector<std::size_t>{25, 50, 75};
            }
            if (unset("--s")) cfg.s = 5;
            if (unset("--snr-list") && unset("--snr-db")) {
                cfg.snr_db_list = {20, 30, 40, 50, 60};
            }
            break;
        }
        case Study::SparsitySweep: {
            if (unset("--nn")) cfg.n = paper ? 200 : 100;
            if (unset("--m")) cfg.m = 50;
            if (unset("--s-list") && unset("--s")) cfg.s_list = {1, 3, 5, 10};
            if (unset("--snr-list") && unset("--snr-db")) cfg.snr_db_list = {20, 40, 60};
            break;
        }
        case Study::ModelComparison: {
            if (unset("--nn")) cfg.n = paper ? 200 : 100;
            if (unset("--m")) cfg.m = 50;
            if (unset("--s")) cfg.s = 5;
            if (unset("--snr-list") && unset("--snr-db")) cfg.snr_db_list = {40.0};
            break;
        }
    }
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
    CLI::App app{"Monte-Carlo studies for the limited-integrator NNLS network"};
    app.set_config("--config", "", "flat key=value file mirroring every flag");

    std::string study_name;
    std::string model_name = "rect";
    std::string integrator_name = "euler";
    std::string preset;
    double snr_db = 40.0;
    ExperimentConfig cfg;

    app.add_option("--study", study_name,
                   "olfactory | pruning | sparse-comparison | sparsity-sweep | model-comparison")
        ->required();
    app.add_option("--preset", preset, "paper-desk (minutes) or paper (full-scale, hours)");
    app.add_option("--model", model_name, "data model: rect | gauss");
    app.add_option("--m", cfg.m, "measurement count M");
    app.add_option("--nn", cfg.n, "signal length N");
    app.add_option("--s", cfg.s, "sparsity s");
    app.add_option("--n", cfg.n_instances, "Monte-Carlo instances per sweep point");
    app.add_option("--seed", cfg.master_seed, "master seed");
    app.add_option("--snr-db", snr_db, "single input SNR in dB");
    app.add_option("--snr-list", cfg.snr_db_list, "comma-separated input SNRs in dB")
        ->delimiter(',');
    app.add_option("--s-list", cfg.s_list, "comma-separated sparsity sweep")->delimiter(',');
    app.add_option("--m-list", cfg.m_list, "comma-separated measurement-count sweep")
        ->delimiter(',');
    app.add_option("--ratio-list", cfg.prune_ratios, "comma-separated pruning ratios in [0, 0.9]")
        ->delimiter(',');
    app.add_option("--out", cfg.out_dir, "output directory for the two CSV files");
    app.add_option("--threads", cfg.threads, "worker threads (0 = hardware)")
        ->envname("NNSA_THREADS");
    app.add_option("--kkt-tol", cfg.solver.kkt_tol, "dynamical-solver convergence tolerance");
    app.add_option("--max-time", cfg.solver.max_time, "simulated-time budget per solve");
    app.add_option("--max-steps", cfg.solver.max_steps, "step budget per solve");
    app.add_option("--integrator", integrator_name, "euler | exact");
    app.add_option("--prox-tol", cfg.solver.prox_tol, "proximal-gradient tolerance");
    app.add_option("--prox-max-iters", cfg.solver.prox_max_iters, "proximal iteration cap");
    app.add_option("--alphas", cfg.solver.n_alphas, "regularization-path length");
    app.add_flag("--emit-timings", cfg.emit_timings,
                 "append wall-clock columns (output no longer byte-stable)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::FileError& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 3;
    } catch (const CLI::ConfigError& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 3;
    } catch (const CLI::ParseError& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 2;
    }

    const auto study = study_from_name(study_name);
    if (!study) {
        std::fprintf(stderr, "unknown study '%s'\n", study_name.c_str());
        return 2;
    }
    cfg.study = *study;
    if (model_name == "rect") cfg.model = DataModel::Rect;
    else if (model_name == "gauss") cfg.model = DataModel::Gaussian;
    else {
        std::fprintf(stderr, "unknown model '%s'\n", model_name.c_str());
        return 2;
    }
    if (integrator_name == "euler") cfg.solver.integrator = IntegratorKind::ProjectedEuler;
    else if (integrator_name == "exact") cfg.solver.integrator = IntegratorKind::ExactSubsystem;
    else {
        std::fprintf(stderr, "unknown integrator '%s'\n", integrator_name.c_str());
        return 2;
    }

    if (!preset.empty()) {
        if (preset != "paper-desk" && preset != "paper") {
            std::fprintf(stderr, "unknown preset '%s'\n", preset.c_str());
            return 2;
        }
        apply_preset(app, preset, cfg);
    }
    if (app.count("--snr-db") > 0 && app.count("--snr-list") == 0) cfg.snr_db_list = {snr_db};
    if ((cfg.study == Study::OlfactorySnrSweep || cfg.study == Study::PruningSweep) &&
        app.count("--m") == 0) {
        cfg.m = cfg.n;  // square system unless explicitly overridden
    }

    try {
        const StudyResult result = run_study(cfg);
        std::printf("study=%s aggregate_rows=%zu instances_per_point=%zu rows=%zu failed_rows=%zu\n",
                    to_string(cfg.study), result.aggregates.size(), cfg.n_instances,
                    result.records.size(), result.failed_rows);
        if (result.negative_matrix_entries > 0) {
            std::printf("note: %zu negative pre-normalization matrix entries were kept as drawn\n",
                        result.negative_matrix_entries);
        }
        for (const auto& f : result.output_files) std::printf("wrote %s\n", f.c_str());
        return 0;
    } catch (const StudyAbortedError& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 5;
    } catch (const OutputWriteError& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 4;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "invalid configuration: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}

}  // namespace nnsa
