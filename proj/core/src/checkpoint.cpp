#include "hollow/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <nlohmann/json.hpp>

#include "hollow/error.hpp"

namespace hollow {

using nlohmann::json;

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint IO assumes a little-endian host");

constexpr char kMagic[4] = {'H', 'N', 'R', 'F'};

std::uint64_t fnv1a(const std::vector<char>& bytes, std::size_t n) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= static_cast<unsigned char>(bytes[i]);
        h *= 0x100000001b3ULL;
    }
    return h;
}

template <typename V>
void put(std::vector<char>& out, V v) {
    char buf[sizeof(V)];
    std::memcpy(buf, &v, sizeof(V));
    out.insert(out.end(), buf, buf + sizeof(V));
}

void put_floats(std::vector<char>& out, std::span<const float> values) {
    put<std::uint64_t>(out, values.size());
    const auto* p = reinterpret_cast<const char*>(values.data());
    out.insert(out.end(), p, p + values.size_bytes());
}

class Reader {
public:
    Reader(const std::vector<char>& bytes, std::size_t limit) : bytes_(bytes), limit_(limit) {}

    template <typename V>
    V get(const char* what) {
        need(sizeof(V), what);
        V v;
        std::memcpy(&v, bytes_.data() + pos_, sizeof(V));
        pos_ += sizeof(V);
        return v;
    }

    std::string get_string(std::size_t n, const char* what) {
        need(n, what);
        std::string s(bytes_.data() + pos_, n);
        pos_ += n;
        return s;
    }

    void get_floats(std::vector<float>& out, const char* what) {
        const auto n = get<std::uint64_t>(what);
        if (n != out.size()) {
            throw IntegrityError(std::string("checkpoint: ") + what + " holds " + std::to_string(n) +
                                 " values, expected " + std::to_string(out.size()));
        }
        need(n * sizeof(float), what);
        std::memcpy(out.data(), bytes_.data() + pos_, n * sizeof(float));
        pos_ += n * sizeof(float);
    }

    std::size_t pos() const { return pos_; }

private:
    void need(std::size_t n, const char* what) {
        if (n > limit_ - pos_) {
            throw IntegrityError(std::string("checkpoint truncated while reading ") + what);
        }
    }

    const std::vector<char>& bytes_;
    std::size_t limit_;
    std::size_t pos_ = 0;
};

} // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
    const auto params = ckpt.model.parameters();
    if (!ckpt.moments.empty() && ckpt.moments.size() != params.size()) {
        throw UsageError("checkpoint: moment count does not match parameter count");
    }
    json header;
    header["config"] = to_json(ckpt.config);
    header["scene_box"] = {{"center", ckpt.box.center}, {"bound", ckpt.box.bound}, {"margin", ckpt.box.margin}};
    header["step"] = ckpt.step;
    header["epoch"] = ckpt.epoch;
    header["gamma"] = ckpt.gamma;
    header["has_moments"] = !ckpt.moments.empty();
    json arrays = json::array();
    for (const auto* p : params) {
        arrays.push_back({{"role", to_string(p->role)}, {"shape", p->shape}});
    }
    header["arrays"] = arrays;
    if (!ckpt.moments.empty()) {
        json t = json::array();
        for (const auto& m : ckpt.moments) t.push_back(m.t);
        header["adam_t"] = t;
    }
    const std::string text = header.dump();

    std::vector<char> out;
    out.insert(out.end(), kMagic, kMagic + 4);
    put<std::uint32_t>(out, kCheckpointVersion);
    put<std::uint64_t>(out, text.size());
    out.insert(out.end(), text.begin(), text.end());
    const std::uint64_t count = params.size() * (ckpt.moments.empty() ? 1 : 3);
    put<std::uint64_t>(out, count);
    for (const auto* p : params) put_floats(out, p->values);
    for (const auto& m : ckpt.moments) {
        put_floats(out, m.m);
        put_floats(out, m.v);
    }
    put<std::uint64_t>(out, fnv1a(out, out.size()));

    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) {
            throw DataError("cannot open " + tmp.string() + " for writing");
        }
        f.write(out.data(), static_cast<std::streamsize>(out.size()));
        if (!f) {
            throw DataError("write failed for " + tmp.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        throw DataError("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
    }
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) {
        throw DataError("cannot open checkpoint " + path.string());
    }
    const std::vector<char> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (bytes.size() < 4 + 4 + 8 + 8) {
        throw IntegrityError("checkpoint " + path.string() + " is truncated");
    }
    if (std::memcmp(bytes.data(), kMagic, 4) != 0) {
        throw IntegrityError(path.string() + " is not a checkpoint (bad magic)");
    }
    const std::size_t body = bytes.size() - 8;
    std::uint64_t stored_sum = 0;
    std::memcpy(&stored_sum, bytes.data() + body, 8);

    Reader r(bytes, body);
    r.get_string(4, "magic");
    const auto version = r.get<std::uint32_t>("version");
    if (version != kCheckpointVersion) {
        throw IntegrityError("checkpoint version " + std::to_string(version) + " is not supported (expected " +
                             std::to_string(kCheckpointVersion) + ")");
    }
    const auto header_len = r.get<std::uint64_t>("header length");
    const std::string text = r.get_string(header_len, "header");
    if (fnv1a(bytes, body) != stored_sum) {
        throw IntegrityError("checkpoint " + path.string() + " is truncated or corrupt (checksum mismatch)");
    }
    const json header = json::parse(text, nullptr, false);
    if (header.is_discarded()) {
        throw IntegrityError("checkpoint header is not valid JSON");
    }

    Checkpoint ckpt;
    try {
        ckpt.config = config_from_json(header.at("config"));
        const auto& box = header.at("scene_box");
        ckpt.box.center = box.at("center").get<Vec3d>();
        ckpt.box.bound = box.at("bound").get<double>();
        ckpt.box.margin = box.at("margin").get<double>();
        ckpt.step = header.at("step").get<std::int64_t>();
        ckpt.epoch = header.at("epoch").get<std::int64_t>();
        ckpt.gamma = header.at("gamma").get<double>();
    } catch (const json::exception& e) {
        throw IntegrityError(std::string("checkpoint header: ") + e.what());
    } catch (const ConfigError& e) {
        throw IntegrityError(std::string("checkpoint header config: ") + e.what());
    }
    const bool has_moments = header.value("has_moments", false);

    ckpt.model = RadianceField<float>(ckpt.config.model, 0);
    auto params = ckpt.model.parameters();
    const auto& arrays = header.at("arrays");
    if (!arrays.is_array() || arrays.size() != params.size()) {
        throw IntegrityError("checkpoint header lists " + std::to_string(arrays.size()) + " arrays, model has " +
                             std::to_string(params.size()));
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (arrays[i].at("shape").get<std::vector<std::size_t>>() != params[i]->shape) {
            throw IntegrityError("checkpoint array " + std::to_string(i) + " has an unexpected shape");
        }
    }
    const auto count = r.get<std::uint64_t>("array count");
    const std::uint64_t expect = params.size() * (has_moments ? 3 : 1);
    if (count != expect) {
        throw IntegrityError("checkpoint holds " + std::to_string(count) + " arrays, expected " +
                             std::to_string(expect));
    }
    for (auto* p : params) r.get_floats(p->values, "parameter array");
    if (has_moments) {
        const auto ts = header.at("adam_t").get<std::vector<std::int64_t>>();
        if (ts.size() != params.size()) {
            throw IntegrityError("checkpoint adam_t length mismatch");
        }
        AdamConfig ac{ckpt.config.train.lr, ckpt.config.train.beta1, ckpt.config.train.beta2, ckpt.config.train.eps};
        for (std::size_t i = 0; i < params.size(); ++i) {
            AdamState<float> st(params[i]->size(), ac);
            st.t = ts[i];
            r.get_floats(st.m, "first moment");
            r.get_floats(st.v, "second moment");
            ckpt.moments.push_back(std::move(st));
        }
    }
    if (r.pos() != body) {
        throw IntegrityError("checkpoint has " + std::to_string(body - r.pos()) + " unexpected trailing bytes");
    }
    return ckpt;
}

} // namespace hollow
