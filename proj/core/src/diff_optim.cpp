#include "hollow/diff_optim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "hollow/error.hpp"

namespace hollow {

std::string to_string(ParamRole role) {
    switch (role) {
    case ParamRole::hashgrid: return "hashgrid";
    case ParamRole::mlp: return "mlp";
    case ParamRole::saliency: return "saliency";
    }
    return "unknown";
}

std::size_t shape_product(std::span<const std::size_t> shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

template <typename T>
ParamTensor<T>::ParamTensor(std::vector<std::size_t> shape_, ParamRole role_)
    : shape(std::move(shape_)), role(role_) {
    const std::size_t n = shape_product(shape);
    values.assign(n, T(0));
    grads.assign(n, T(0));
}

template <typename T>
void zero_grads(ParamTensor<T>& param) {
    std::fill(param.grads.begin(), param.grads.end(), T(0));
}

template <typename T>
void zero_grads(std::span<ParamTensor<T>* const> params) {
    for (auto* p : params) {
        zero_grads(*p);
    }
}

template <typename T>
void adam_step(ParamTensor<T>& param, AdamState<T>& state) {
    const std::size_t n = param.values.size();
    if (param.grads.size() != n || state.m.size() != n || state.v.size() != n) {
        throw ConfigError("adam_step: state sized " + std::to_string(state.m.size()) + " for tensor of " +
                          std::to_string(n) + " values");
    }
    const auto& cfg = state.config;
    state.t += 1;
    const double t = static_cast<double>(state.t);
    const T b1 = T(cfg.beta1);
    const T b2 = T(cfg.beta2);
    const T bias1 = T(1.0 - std::pow(cfg.beta1, t));
    const T bias2 = T(1.0 - std::pow(cfg.beta2, t));
    const T lr = T(cfg.lr);
    const T eps = T(cfg.eps);
    for (std::size_t i = 0; i < n; ++i) {
        const T g = param.grads[i];
        state.m[i] = b1 * state.m[i] + (T(1) - b1) * g;
        state.v[i] = b2 * state.v[i] + (T(1) - b2) * g * g;
        const T m_hat = state.m[i] / bias1;
        const T v_hat = state.v[i] / bias2;
        param.values[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
    }
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

template <typename T>
void fill_init(std::span<T> values, const InitSpec& spec, std::uint64_t seed) {
    switch (spec.scheme) {
    case InitScheme::zeros: std::fill(values.begin(), values.end(), T(0)); return;
    case InitScheme::ones: std::fill(values.begin(), values.end(), T(1)); return;
    case InitScheme::uniform: {
        if (!(spec.low < spec.high)) {
            throw ConfigError("uniform init requires low < high");
        }
        std::mt19937_64 rng(seed);
        const double span = spec.high - spec.low;
        for (auto& v : values) {
            // 53 random mantissa bits; avoids implementation-defined distributions.
            const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
            v = static_cast<T>(spec.low + span * u);
        }
        return;
    }
    }
}

template <typename T>
ParamTensor<T> seeded_init(std::vector<std::size_t> shape, const InitSpec& spec, std::uint64_t seed,
                           ParamRole role) {
    ParamTensor<T> p(std::move(shape), role);
    fill_init<T>(p.values, spec, seed);
    return p;
}

namespace {

double rel_error(double a, double n, double floor) {
    const double denom = std::max({std::abs(a), std::abs(n), floor});
    return std::abs(a - n) / denom;
}

FiniteDiffReport build_report(std::span<const double> analytic, std::span<const double> numeric,
                              const FiniteDiffOptions& opts) {
    FiniteDiffReport report;
    report.tolerance = opts.tolerance;
    double scale = 0.0;
    for (double n : numeric) {
        scale = std::max(scale, std::abs(n));
    }
    const double floor = std::max(opts.abs_floor, opts.floor_ratio * scale);
    report.entries.reserve(analytic.size());
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        FiniteDiffEntry e{i, analytic[i], numeric[i], rel_error(analytic[i], numeric[i], floor)};
        report.max_rel_error = std::max(report.max_rel_error, e.rel_error);
        if (!(e.rel_error <= opts.tolerance)) {
            report.flagged.push_back(i);
        }
        report.entries.push_back(e);
    }
    return report;
}

} // namespace

FiniteDiffReport compare_gradients(std::span<const double> analytic, std::span<const double> numeric,
                                   const FiniteDiffOptions& opts) {
    if (analytic.size() != numeric.size()) {
        throw UsageError("compare_gradients: length mismatch");
    }
    return build_report(analytic, numeric, opts);
}

template <typename T>
FiniteDiffReport finite_diff_check(const std::function<double()>& f, std::span<T> values,
                                   std::span<const double> analytic, const FiniteDiffOptions& opts) {
    if (!(opts.step > 0.0)) {
        throw UsageError("finite_diff_check: step must be positive");
    }
    if (analytic.size() != values.size()) {
        throw UsageError("finite_diff_check: analytic gradient length mismatch");
    }
    auto central = [&](std::size_t i, double step) {
        const T saved = values[i];
        const T h = static_cast<T>(step);
        values[i] = saved + h;
        const double plus = f();
        values[i] = saved - h;
        const double minus = f();
        values[i] = saved;
        if (!std::isfinite(plus) || !std::isfinite(minus)) {
            throw NumericalError("finite_diff_check: non-finite objective at coordinate " + std::to_string(i));
        }
        // Divide by the step actually taken after rounding to T.
        const double taken = static_cast<double>(saved + h) - static_cast<double>(saved - h);
        return (plus - minus) / taken;
    };
    std::vector<double> numeric(values.size());
    std::vector<double> half;
    for (std::size_t i = 0; i < values.size(); ++i) {
        numeric[i] = central(i, opts.step);
        if (opts.fallback_step > 0.0) {
            half.push_back(central(i, 0.5 * opts.step));
        }
    }
    if (opts.fallback_step > 0.0) {
        double scale = 0.0;
        for (double n : numeric) {
            scale = std::max(scale, std::abs(n));
        }
        const double floor = std::max(opts.abs_floor, opts.floor_ratio * scale);
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (rel_error(numeric[i], half[i], floor) > 0.5 * opts.tolerance) {
                numeric[i] = central(i, opts.fallback_step);
            }
        }
    }
    return build_report(analytic, numeric, opts);
}

#define HOLLOW_INSTANTIATE(T)                                                                             \
    template struct ParamTensor<T>;                                                                       \
    template void zero_grads<T>(ParamTensor<T>&);                                                         \
    template void zero_grads<T>(std::span<ParamTensor<T>* const>);                                       \
    template void adam_step<T>(ParamTensor<T>&, AdamState<T>&);                                           \
    template void fill_init<T>(std::span<T>, const InitSpec&, std::uint64_t);                             \
    template ParamTensor<T> seeded_init<T>(std::vector<std::size_t>, const InitSpec&, std::uint64_t,      \
                                           ParamRole);                                                    \
    template FiniteDiffReport finite_diff_check<T>(const std::function<double()>&, std::span<T>,          \
                                                   std::span<const double>, const FiniteDiffOptions&);

HOLLOW_INSTANTIATE(float)
HOLLOW_INSTANTIATE(double)

#undef HOLLOW_INSTANTIATE

} // namespace hollow
