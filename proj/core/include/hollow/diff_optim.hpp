#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace hollow {

enum class ParamRole { hashgrid, mlp, saliency };

std::string to_string(ParamRole role);

/// Trainable tensor: flat values plus a gradient buffer of the same length.
template <typename T>
struct ParamTensor {
    std::vector<std::size_t> shape;
    std::vector<T> values;
    std::vector<T> grads;
    ParamRole role = ParamRole::mlp;

    ParamTensor() = default;
    ParamTensor(std::vector<std::size_t> shape_, ParamRole role_);

    std::size_t size() const { return values.size(); }

    /// Copy with values converted to another scalar type; grads are zeroed.
    template <typename U>
    ParamTensor<U> cast() const {
        ParamTensor<U> out;
        out.shape = shape;
        out.role = role;
        out.values.assign(values.begin(), values.end());
        out.grads.assign(values.size(), U(0));
        return out;
    }
};

std::size_t shape_product(std::span<const std::size_t> shape);

template <typename T>
void zero_grads(ParamTensor<T>& param);

template <typename T>
void zero_grads(std::span<ParamTensor<T>* const> params);

struct AdamConfig {
    double lr = 1e-2;
    double beta1 = 0.9;
    double beta2 = 0.99;
    double eps = 1e-15;
};

/// First/second moment estimates for one ParamTensor.
template <typename T>
struct AdamState {
    std::vector<T> m;
    std::vector<T> v;
    std::int64_t t = 0;
    AdamConfig config;

    AdamState() = default;
    AdamState(std::size_t n, AdamConfig cfg) : m(n, T(0)), v(n, T(0)), config(cfg) {}
};

/// Bias-corrected Adam update of param.values from param.grads.
/// Throws ConfigError when the state is not sized to the tensor.
template <typename T>
void adam_step(ParamTensor<T>& param, AdamState<T>& state);

enum class InitScheme { uniform, ones, zeros };

struct InitSpec {
    InitScheme scheme = InitScheme::zeros;
    double low = 0.0;
    double high = 0.0;

    static InitSpec uniform(double a, double b) { return {InitScheme::uniform, a, b}; }
    static InitSpec ones() { return {InitScheme::ones, 1.0, 1.0}; }
    static InitSpec zeros() { return {InitScheme::zeros, 0.0, 0.0}; }
};

/// Deterministic initialization: identical (shape, spec, seed) gives identical values.
template <typename T>
ParamTensor<T> seeded_init(std::vector<std::size_t> shape, const InitSpec& spec, std::uint64_t seed,
                           ParamRole role = ParamRole::mlp);

/// Fills values in place; used when a tensor must be re-initialized.
template <typename T>
void fill_init(std::span<T> values, const InitSpec& spec, std::uint64_t seed);

/// SplitMix64 step, used to derive independent sub-seeds from one master seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

struct FiniteDiffEntry {
    std::size_t index = 0;
    double analytic = 0.0;
    double numeric = 0.0;
    double rel_error = 0.0;
};

struct FiniteDiffReport {
    std::vector<FiniteDiffEntry> entries;
    std::vector<std::size_t> flagged;
    double max_rel_error = 0.0;
    double tolerance = 0.0;

    bool passed() const { return flagged.empty(); }
};

struct FiniteDiffOptions {
    double step = 1e-5;
    double tolerance = 1e-3;
    /// Relative errors are taken against max(|analytic|, |numeric|, floor), where
    /// floor = floor_ratio * max_i |numeric_i|; coordinates whose gradient is
    /// negligible against the whole vector are compared at that scale.
    double floor_ratio = 1e-3;
    /// Absolute floor, used when every gradient is zero.
    double abs_floor = 1e-12;
    /// When positive, every coordinate is also differenced at step/2. If the two
    /// estimates disagree by more than tolerance/2 a kink lies within the step
    /// and the estimate at fallback_step is used instead.
    double fallback_step = 0.0;
};

/// Central-difference check of `analytic` (dL/dvalues) against
/// (f(v+h) - f(v-h)) / 2h, perturbing `values` in place one coordinate at a time.
/// `values` are restored afterwards. Throws NumericalError if f is non-finite.
template <typename T>
FiniteDiffReport finite_diff_check(const std::function<double()>& f, std::span<T> values,
                                   std::span<const double> analytic, const FiniteDiffOptions& opts = {});

/// Relative error between two gradient vectors using the same rule as
/// finite_diff_check, without re-evaluating anything.
FiniteDiffReport compare_gradients(std::span<const double> analytic, std::span<const double> numeric,
                                   const FiniteDiffOptions& opts = {});

} // namespace hollow
