#include "hollow/gated_decoder.hpp"

#include <cmath>

#include "hollow/error.hpp"

namespace hollow {

std::string to_string(GateMode mode) {
    switch (mode) {
    case GateMode::none: return "none";
    case GateMode::hard: return "hard";
    case GateMode::soft: return "soft";
    }
    return "unknown";
}

GateMode parse_gate_mode(const std::string& s) {
    if (s == "none") return GateMode::none;
    if (s == "hard") return GateMode::hard;
    if (s == "soft") return GateMode::soft;
    throw ConfigError("unknown gate mode '" + s + "' (expected none|hard|soft)");
}

double alpha_schedule(std::int64_t epoch, const GateConfig& gate) {
    return epoch < gate.epoch_threshold ? gate.alpha_low : gate.alpha_high;
}

template <typename T>
std::array<T, 16> sh_encode(const Vec3<T>& dir) {
    Vec3<T> d = dir;
    const T n = norm(d);
    if (n > T(0) && std::abs(n - T(1)) > T(1e-6)) {
        d = {d[0] / n, d[1] / n, d[2] / n};
    }
    const T x = d[0], y = d[1], z = d[2];
    const T xx = x * x, yy = y * y, zz = z * z;
    return {
        T(0.28209479177387814),
        T(-0.48860251190291987) * y,
        T(0.48860251190291987) * z,
        T(-0.48860251190291987) * x,
        T(1.0925484305920792) * x * y,
        T(-1.0925484305920792) * y * z,
        T(0.94617469575755997) * zz - T(0.31539156525251999),
        T(-1.0925484305920792) * x * z,
        T(0.54627421529603959) * (xx - yy),
        T(0.59004358992664352) * y * (T(3) * xx - yy) * T(-1),
        T(2.8906114426405538) * x * y * z,
        T(0.45704579946446572) * y * (T(1) - T(5) * zz),
        T(0.3731763325901154) * z * (T(5) * zz - T(3)),
        T(0.45704579946446572) * x * (T(1) - T(5) * zz),
        T(1.4453057213202769) * z * (xx - yy),
        T(0.59004358992664352) * x * (T(3) * yy - xx),
    };
}

template <typename T>
T soft_gate(std::span<const T> v, T alpha) {
    T sq = T(0);
    for (T x : v) sq += x * x;
    return std::tanh(alpha * std::sqrt(sq));
}

template <typename T>
T hard_gate(std::span<const T> v) {
    for (T x : v) {
        if (x != T(0)) return T(1);
    }
    return T(0);
}

std::size_t DecoderLayout::param_count() const {
    const auto in = static_cast<std::size_t>(input_dim);
    const auto h = static_cast<std::size_t>(hidden);
    const auto dout = static_cast<std::size_t>(density_out());
    const auto cin = static_cast<std::size_t>(color_in());
    return in * h + h * h + h * dout + dout + cin * h + h * h + h * 3 + 3;
}

namespace {

std::array<std::vector<std::size_t>, decoder_param_count> decoder_shapes(const DecoderLayout& l) {
    const auto in = static_cast<std::size_t>(l.input_dim);
    const auto h = static_cast<std::size_t>(l.hidden);
    const auto dout = static_cast<std::size_t>(l.density_out());
    const auto cin = static_cast<std::size_t>(l.color_in());
    return {{{in, h}, {h, h}, {h, dout}, {dout}, {cin, h}, {h, h}, {h, 3}, {3}}};
}

template <typename T>
using ConstMap = Eigen::Map<const RowMatrix<T>>;

template <typename T>
ConstMap<T> as_matrix(const ParamTensor<T>& p) {
    const auto rows = static_cast<Eigen::Index>(p.shape.size() == 2 ? p.shape[0] : 1);
    const auto cols = static_cast<Eigen::Index>(p.shape.back());
    return ConstMap<T>(p.values.data(), rows, cols);
}

} // namespace

template <typename T>
void DecoderGrads<T>::reset(const DecoderLayout& layout) {
    const auto shapes = decoder_shapes(layout);
    for (int i = 0; i < decoder_param_count; ++i) {
        const auto& s = shapes[static_cast<std::size_t>(i)];
        const auto rows = static_cast<Eigen::Index>(s.size() == 2 ? s[0] : 1);
        const auto cols = static_cast<Eigen::Index>(s.back());
        g[static_cast<std::size_t>(i)].setZero(rows, cols);
    }
}

template <typename T>
GatedDecoder<T>::GatedDecoder(const DecoderLayout& layout, std::uint64_t seed) : layout_(layout) {
    if (layout.input_dim < 1 || layout.hidden < 1 || layout.geo_dim < 0) {
        throw ConfigError("decoder layout dimensions must be positive");
    }
    const auto shapes = decoder_shapes(layout);
    // fan_in of each tensor; biases use the fan_in of their layer.
    const std::array<int, decoder_param_count> fan_in{layout.input_dim, layout.hidden, layout.hidden,
                                                      layout.hidden,    layout.color_in(), layout.hidden,
                                                      layout.hidden,    layout.hidden};
    for (int i = 0; i < decoder_param_count; ++i) {
        const double bound = std::sqrt(1.0 / fan_in[static_cast<std::size_t>(i)]);
        params_[static_cast<std::size_t>(i)] =
            seeded_init<T>(shapes[static_cast<std::size_t>(i)], InitSpec::uniform(-bound, bound),
                           mix_seed(seed, static_cast<std::uint64_t>(i)), ParamRole::mlp);
    }
}

template <typename T>
void GatedDecoder<T>::forward(const RowMatrix<T>& v, const RowMatrix<T>& sh, GateMode mode, T alpha,
                              std::span<T> sigma, std::span<T> rgb, DecoderCache<T>* cache) const {
    const Eigen::Index rows = v.rows();
    if (v.cols() != layout_.input_dim || sh.rows() != rows || sh.cols() != DecoderLayout::dir_dim) {
        throw UsageError("decoder forward: input shape mismatch");
    }
    const auto W0 = as_matrix(params_[density_w0]);
    const auto W1 = as_matrix(params_[density_w1]);
    const auto W2 = as_matrix(params_[density_w2]);
    const auto B2 = as_matrix(params_[density_b2]);
    const auto C0 = as_matrix(params_[color_w0]);
    const auto C1 = as_matrix(params_[color_w1]);
    const auto C2 = as_matrix(params_[color_w2]);
    const auto CB = as_matrix(params_[color_b2]);

    DecoderCache<T> local;
    DecoderCache<T>& c = cache ? *cache : local;
    c.v = v;
    c.h1.noalias() = v * W0;
    c.h1 = c.h1.cwiseMax(T(0));
    c.h2.noalias() = c.h1 * W1;
    c.h2 = c.h2.cwiseMax(T(0));
    c.out.noalias() = c.h2 * W2;
    c.out.rowwise() += B2.row(0);

    const int geo = layout_.geo_dim;
    c.cin.resize(rows, layout_.color_in());
    c.cin.leftCols(geo) = c.out.rightCols(geo);
    c.cin.rightCols(DecoderLayout::dir_dim) = sh;
    c.g1.noalias() = c.cin * C0;
    c.g1 = c.g1.cwiseMax(T(0));
    c.g2.noalias() = c.g1 * C1;
    c.g2 = c.g2.cwiseMax(T(0));
    c.rgb.noalias() = c.g2 * C2;
    c.rgb.rowwise() += CB.row(0);
    c.rgb = c.rgb.unaryExpr([](T x) { return sigmoid(x); });

    c.gate.resize(static_cast<std::size_t>(rows));
    c.vnorm.resize(static_cast<std::size_t>(rows));
    for (Eigen::Index r = 0; r < rows; ++r) {
        const T vn = v.row(r).norm();
        c.vnorm[static_cast<std::size_t>(r)] = vn;
        T g = T(1);
        if (mode == GateMode::soft) {
            g = std::tanh(alpha * vn);
        } else if (mode == GateMode::hard) {
            g = vn == T(0) ? T(0) : T(1);
        }
        c.gate[static_cast<std::size_t>(r)] = g;
        const T s = g * softplus(c.out(r, 0));
        if (!std::isfinite(s)) {
            throw NumericalError("decoder forward: non-finite density at row " + std::to_string(r) +
                                 " (raw=" + std::to_string(static_cast<double>(c.out(r, 0))) + ")");
        }
        sigma[static_cast<std::size_t>(r)] = s;
        for (int k = 0; k < 3; ++k) {
            rgb[static_cast<std::size_t>(r) * 3 + static_cast<std::size_t>(k)] = c.rgb(r, k);
        }
    }
}

template <typename T>
void GatedDecoder<T>::backward(const DecoderCache<T>& c, std::span<const T> dsigma, std::span<const T> drgb,
                               GateMode mode, T alpha, DecoderGrads<T>& grads, RowMatrix<T>& dv) const {
    const Eigen::Index rows = c.v.rows();
    const auto W0 = as_matrix(params_[density_w0]);
    const auto W1 = as_matrix(params_[density_w1]);
    const auto W2 = as_matrix(params_[density_w2]);
    const auto C0 = as_matrix(params_[color_w0]);
    const auto C1 = as_matrix(params_[color_w1]);
    const auto C2 = as_matrix(params_[color_w2]);
    const int geo = layout_.geo_dim;

    // Color branch.
    RowMatrix<T> dz(rows, 3);
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (int k = 0; k < 3; ++k) {
            const T y = c.rgb(r, k);
            dz(r, k) = drgb[static_cast<std::size_t>(r) * 3 + static_cast<std::size_t>(k)] * y * (T(1) - y);
        }
    }
    grads.g[color_w2].noalias() += c.g2.transpose() * dz;
    grads.g[color_b2] += dz.colwise().sum();
    RowMatrix<T> dg2 = dz * C2.transpose();
    dg2 = dg2.cwiseProduct((c.g2.array() > T(0)).template cast<T>().matrix());
    grads.g[color_w1].noalias() += c.g1.transpose() * dg2;
    RowMatrix<T> dg1 = dg2 * C1.transpose();
    dg1 = dg1.cwiseProduct((c.g1.array() > T(0)).template cast<T>().matrix());
    grads.g[color_w0].noalias() += c.cin.transpose() * dg1;
    const RowMatrix<T> dcin = dg1 * C0.transpose();

    // Density branch: sigma = gate * softplus(out0); geo features feed the color net.
    RowMatrix<T> dout(rows, layout_.density_out());
    dout.rightCols(geo) = dcin.leftCols(geo);
    std::vector<T> dgate(static_cast<std::size_t>(rows));
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto i = static_cast<std::size_t>(r);
        const T raw = c.out(r, 0);
        dout(r, 0) = dsigma[i] * c.gate[i] * sigmoid(raw);
        dgate[i] = dsigma[i] * softplus(raw);
    }
    grads.g[density_w2].noalias() += c.h2.transpose() * dout;
    grads.g[density_b2] += dout.colwise().sum();
    RowMatrix<T> dh2 = dout * W2.transpose();
    dh2 = dh2.cwiseProduct((c.h2.array() > T(0)).template cast<T>().matrix());
    grads.g[density_w1].noalias() += c.h1.transpose() * dh2;
    RowMatrix<T> dh1 = dh2 * W1.transpose();
    dh1 = dh1.cwiseProduct((c.h1.array() > T(0)).template cast<T>().matrix());
    grads.g[density_w0].noalias() += c.v.transpose() * dh1;
    dv.noalias() = dh1 * W0.transpose();

    if (mode == GateMode::soft) {
        for (Eigen::Index r = 0; r < rows; ++r) {
            const auto i = static_cast<std::size_t>(r);
            const T vn = c.vnorm[i];
            if (vn == T(0)) {
                continue; // subgradient 0 at the origin
            }
            const T g = c.gate[i];
            const T coeff = dgate[i] * alpha * (T(1) - g * g) / vn;
            dv.row(r) += coeff * c.v.row(r);
        }
    }
}

template <typename T>
void GatedDecoder<T>::accumulate(const DecoderGrads<T>& grads) {
    for (int i = 0; i < decoder_param_count; ++i) {
        auto& p = params_[static_cast<std::size_t>(i)];
        const auto& g = grads.g[static_cast<std::size_t>(i)];
        const T* src = g.data();
        for (std::size_t k = 0; k < p.grads.size(); ++k) {
            p.grads[k] += src[k];
        }
    }
}

template <typename T>
DecoderOutput<T> GatedDecoder<T>::evaluate(std::span<const T> v, const Vec3<T>& dir, GateMode mode, T alpha) const {
    RowMatrix<T> vin(1, layout_.input_dim);
    for (int i = 0; i < layout_.input_dim; ++i) vin(0, i) = v[static_cast<std::size_t>(i)];
    const auto sh = sh_encode(dir);
    RowMatrix<T> shm(1, DecoderLayout::dir_dim);
    for (int i = 0; i < DecoderLayout::dir_dim; ++i) shm(0, i) = sh[static_cast<std::size_t>(i)];
    DecoderOutput<T> out;
    forward(vin, shm, mode, alpha, std::span<T>(&out.sigma, 1), out.rgb, nullptr);
    return out;
}

template <typename T>
T GatedDecoder<T>::raw_density(std::span<const T> v) const {
    RowMatrix<T> vin(1, layout_.input_dim);
    for (int i = 0; i < layout_.input_dim; ++i) vin(0, i) = v[static_cast<std::size_t>(i)];
    RowMatrix<T> h1 = (vin * as_matrix(params_[density_w0])).cwiseMax(T(0));
    RowMatrix<T> h2 = (h1 * as_matrix(params_[density_w1])).cwiseMax(T(0));
    RowMatrix<T> out = h2 * as_matrix(params_[density_w2]) + as_matrix(params_[density_b2]);
    return out(0, 0);
}

template std::array<float, 16> sh_encode<float>(const Vec3<float>&);
template std::array<double, 16> sh_encode<double>(const Vec3<double>&);
template float soft_gate<float>(std::span<const float>, float);
template double soft_gate<double>(std::span<const double>, double);
template float hard_gate<float>(std::span<const float>);
template double hard_gate<double>(std::span<const double>);
template struct DecoderGrads<float>;
template struct DecoderGrads<double>;
template class GatedDecoder<float>;
template class GatedDecoder<double>;

} // namespace hollow
