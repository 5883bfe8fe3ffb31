#include "nnsa/datagen.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>

#include "nnsa/detail/format.hpp"
#include "nnsa/rng.hpp"

namespace nnsa {

namespace {

constexpr double kSqrt12 = 3.4641016151377544;
constexpr double kSqrt3 = 1.7320508075688772;

// per-purpose sub-streams so the draw layout is independent of code paths
enum Stream : std::uint64_t { kSupport = 1, kSignal = 2, kMatrix = 3, kNoise = 4 };

void validate(const DataModelSpec& spec) {
    if (spec.m == 0 || spec.n == 0) throw std::invalid_argument("DataModelSpec: empty dimensions");
    if (spec.s < 1 || spec.s > spec.n) throw std::invalid_argument("DataModelSpec: bad sparsity");
    if (!std::isfinite(spec.input_snr_db)) {
        throw std::invalid_argument("DataModelSpec: non-finite input SNR");
    }
}

}  // namespace

const char* to_string(DataModel model) noexcept {
    return model == DataModel::Rect ? "rect" : "gauss";
}

DataModelSpec DataModelSpec::rect(std::size_t m, std::size_t n, std::size_t s,
                                  double input_snr_db) {
    DataModelSpec spec{DataModel::Rect, m, n, s, input_snr_db, kSqrt3, 1.0};
    validate(spec);
    return spec;
}

DataModelSpec DataModelSpec::gaussian(std::size_t m, std::size_t n, std::size_t s,
                                      double input_snr_db) {
    DataModelSpec spec{DataModel::Gaussian, m, n, s, input_snr_db, 5.0, 1.0};
    validate(spec);
    return spec;
}

double input_snr_theoretical(const DataModelSpec& spec, double noise_var) {
    if (!(noise_var > 0.0)) throw std::invalid_argument("input_snr_theoretical: noise_var <= 0");
    const double mu_a2 = spec.mu_a * spec.mu_a;
    const double mu_x2 = DataModelSpec::kMuX * DataModelSpec::kMuX;
    const double s = static_cast<double>(spec.s);
    const double factor =
        DataModelSpec::kVarX + mu_x2 * (s * mu_a2 + spec.var_a) / (mu_a2 + spec.var_a);
    return s / (static_cast<double>(spec.m) * noise_var) * factor;
}

double noise_var_for_snr(const DataModelSpec& spec) {
    const double snr_linear = std::pow(10.0, spec.input_snr_db / 10.0);
    const double mu_a2 = spec.mu_a * spec.mu_a;
    const double mu_x2 = DataModelSpec::kMuX * DataModelSpec::kMuX;
    const double s = static_cast<double>(spec.s);
    const double factor =
        DataModelSpec::kVarX + mu_x2 * (s * mu_a2 + spec.var_a) / (mu_a2 + spec.var_a);
    return s / (static_cast<double>(spec.m) * snr_linear) * factor;
}

double rect_noise_halfwidth(double noise_var) { return kSqrt3 * std::sqrt(noise_var); }

Instance generate(const DataModelSpec& spec, std::uint64_t seed) {
    validate(spec);
    Instance inst;
    inst.seed = seed;

    // support: uniform s-subset via partial Fisher-Yates
    {
        Philox rng(seed, kSupport);
        std::vector<std::size_t> perm(spec.n);
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        for (std::size_t i = 0; i < spec.s; ++i) {
            const std::size_t j = i + rng.uniform_index(spec.n - i);
            std::swap(perm[i], perm[j]);
        }
        inst.support.assign(perm.begin(), perm.begin() + spec.s);
        std::sort(inst.support.begin(), inst.support.end());
    }

    inst.x0 = RealVector(spec.n, 0.0);
    {
        Philox rng(seed, kSignal);
        for (std::size_t idx : inst.support) inst.x0[idx] = kSqrt12 * rng.uniform01();
    }

    {
        Philox rng(seed, kMatrix);
        RealMatrix a(spec.m, spec.n);
        for (std::size_t r = 0; r < spec.m; ++r) {
            for (std::size_t c = 0; c < spec.n; ++c) {
                const double v = spec.kind == DataModel::Rect ? kSqrt12 * rng.uniform01()
                                                              : spec.mu_a + rng.gaussian();
                if (v < 0.0) ++inst.negative_matrix_entries;
                a(r, c) = v;
            }
        }
        inst.a = normalize_columns(a);
    }

    const double noise_var = noise_var_for_snr(spec);
    inst.eta = RealVector(spec.m);
    {
        Philox rng(seed, kNoise);
        if (spec.kind == DataModel::Rect) {
            const double gamma = rect_noise_halfwidth(noise_var);
            for (std::size_t i = 0; i < spec.m; ++i) inst.eta[i] = rng.uniform(-gamma, gamma);
        } else {
            const double sigma = std::sqrt(noise_var);
            for (std::size_t i = 0; i < spec.m; ++i) inst.eta[i] = sigma * rng.gaussian();
        }
    }

    inst.y0 = matvec(inst.a, inst.x0);
    inst.y = inst.y0;
    for (std::size_t i = 0; i < spec.m; ++i) inst.y[i] += inst.eta[i];
    return inst;
}

RealMatrix prune(const RealMatrix& a, double ratio) {
    if (!(ratio >= 0.0 && ratio <= 0.9)) throw std::invalid_argument("prune: ratio outside [0, 0.9]");
    const std::size_t total = a.size();
    const auto k = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(total)));
    RealMatrix out = a;
    if (k == 0) return out;
    std::vector<std::size_t> order(total);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
        const double vi = a.data()[i], vj = a.data()[j];
        return vi < vj || (vi == vj && i < j);
    });
    for (std::size_t i = 0; i < k; ++i) out.data()[order[i]] = 0.0;
    return out;
}

namespace {

void dump_vector(std::string& out, const char* field, const RealVector& v) {
    for (std::size_t i = 0; i < v.size(); ++i) {
        out += field;
        out += ',';
        detail::append_number(out, static_cast<std::uint64_t>(i));
        out += ",0,";
        detail::append_number(out, v[i]);
        out += '\n';
    }
}

}  // namespace

void write_instance_csv(std::ostream& os, const Instance& inst) {
    std::string out = "field,i,j,value\n";
    auto meta = [&](std::uint64_t i, double v) {
        out += "meta,";
        detail::append_number(out, i);
        out += ",0,";
        detail::append_number(out, v);
        out += '\n';
    };
    meta(0, static_cast<double>(inst.a.rows()));
    meta(1, static_cast<double>(inst.a.cols()));
    meta(2, static_cast<double>(inst.seed));
    meta(3, static_cast<double>(inst.negative_matrix_entries));
    for (std::size_t r = 0; r < inst.a.rows(); ++r) {
        for (std::size_t c = 0; c < inst.a.cols(); ++c) {
            out += "A,";
            detail::append_number(out, static_cast<std::uint64_t>(r));
            out += ',';
            detail::append_number(out, static_cast<std::uint64_t>(c));
            out += ',';
            detail::append_number(out, inst.a(r, c));
            out += '\n';
        }
    }
    dump_vector(out, "x0", inst.x0);
    for (std::size_t k = 0; k < inst.support.size(); ++k) {
        out += "support,";
        detail::append_number(out, static_cast<std::uint64_t>(k));
        out += ",0,";
        detail::append_number(out, static_cast<double>(inst.support[k]));
        out += '\n';
    }
    dump_vector(out, "y0", inst.y0);
    dump_vector(out, "eta", inst.eta);
    dump_vector(out, "y", inst.y);
    os << out;
}

Instance read_instance_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("instance csv: empty stream");

    std::size_t m = 0, n = 0;
    Instance inst;
    std::vector<std::tuple<std::string, std::size_t, std::size_t, double>> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::array<std::string_view, 4> parts;
        std::string_view sv = line;
        for (int k = 0; k < 4; ++k) {
            const auto pos = k < 3 ? sv.find(',') : std::string_view::npos;
            parts[k] = sv.substr(0, pos);
            if (pos != std::string_view::npos) sv.remove_prefix(pos + 1);
        }
        auto to_u = [](std::string_view v) {
            std::size_t r = 0;
            std::from_chars(v.data(), v.data() + v.size(), r);
            return r;
        };
        double value = 0.0;
        std::from_chars(parts[3].data(), parts[3].data() + parts[3].size(), value);
        rows.emplace_back(std::string(parts[0]), to_u(parts[1]), to_u(parts[2]), value);
    }
    for (const auto& [field, i, j, v] : rows) {
        if (field == "meta") {
            if (i == 0) m = static_cast<std::size_t>(v);
            if (i == 1) n = static_cast<std::size_t>(v);
            if (i == 2) inst.seed = static_cast<std::uint64_t>(v);
            if (i == 3) inst.negative_matrix_entries = static_cast<std::size_t>(v);
        }
    }
    if (m == 0 || n == 0) throw std::runtime_error("instance csv: missing meta rows");
    inst.a = RealMatrix(m, n);
    inst.x0 = RealVector(n);
    inst.y0 = RealVector(m);
    inst.eta = RealVector(m);
    inst.y = RealVector(m);
    for (const auto& [field, i, j, v] : rows) {
        if (field == "A") inst.a(i, j) = v;
        else if (field == "x0") inst.x0[i] = v;
        else if (field == "support") inst.support.push_back(static_cast<std::size_t>(v));
        else if (field == "y0") inst.y0[i] = v;
        else if (field == "eta") inst.eta[i] = v;
        else if (field == "y") inst.y[i] = v;
    }
    return inst;
}

}  // namespace nnsa
