#pragma once

// On-disk formats.
//
// NVTF tensor file, all integers little-endian:
//   offset 0   magic "NVTF"
//   offset 4   u32 version (= 1)
//   offset 8   u8  dtype (0 = f32, 1 = f64, 2 = i64)
//   offset 9   u8  ndim
//   offset 10  ndim x u64 dims
//   then       row-major payload, element size x prod(dims) bytes
//
// Checkpoints, datasets, subjects and trajectories are directories holding
// NVTF files plus a key-value metadata/manifest file. Every file is written
// to a temporary name and renamed into place.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "nvolve/dataset.hpp"
#include "nvolve/embedding.hpp"
#include "nvolve/encoder.hpp"
#include "nvolve/error.hpp"
#include "nvolve/keyvalue.hpp"
#include "nvolve/objective.hpp"
#include "nvolve/optimizer.hpp"
#include "nvolve/synthetic.hpp"
#include "nvolve/training.hpp"

namespace nvolve {

static_assert(std::numeric_limits<double>::is_iec559 && std::numeric_limits<float>::is_iec559);

enum class DType : std::uint8_t { f32 = 0, f64 = 1, i64 = 2 };

inline std::size_t element_size(DType t) noexcept { return t == DType::f32 ? 4 : 8; }

inline const char* to_string(DType t) noexcept {
    switch (t) {
        case DType::f32: return "f32";
        case DType::f64: return "f64";
        case DType::i64: return "i64";
    }
    return "?";
}

/// A dense, row-major, typed n-dimensional array.
struct Tensor {
    using Storage = std::variant<std::vector<float>, std::vector<double>, std::vector<std::int64_t>>;

    std::vector<std::uint64_t> dims;
    Storage data;

    static Tensor f64(std::vector<std::uint64_t> dims, std::vector<double> values) { return {std::move(dims), std::move(values)}; }
    static Tensor f32(std::vector<std::uint64_t> dims, std::vector<float> values) { return {std::move(dims), std::move(values)}; }
    static Tensor i64(std::vector<std::uint64_t> dims, std::vector<std::int64_t> values) { return {std::move(dims), std::move(values)}; }

    [[nodiscard]] DType dtype() const noexcept { return static_cast<DType>(data.index()); }

    [[nodiscard]] std::size_t element_count() const {
        std::size_t n = 1;
        for (auto d : dims) {
            if (d != 0 && n > std::numeric_limits<std::size_t>::max() / d)
                throw FormatError(FormatErrorKind::malformed, "tensor dims overflow");
            n *= static_cast<std::size_t>(d);
        }
        return n;
    }

    [[nodiscard]] std::size_t stored_count() const {
        return std::visit([](const auto& v) { return v.size(); }, data);
    }

    /// Values widened to double (f32 and i64 convert exactly or by rounding).
    [[nodiscard]] std::vector<double> as_f64() const {
        return std::visit([](const auto& v) { return std::vector<double>(v.begin(), v.end()); }, data);
    }

    friend bool operator==(const Tensor& a, const Tensor& b) {
        if (a.dims != b.dims || a.data.index() != b.data.index()) return false;
        // Bitwise comparison so NaN payloads and signed zeros count.
        return std::visit(
            [&](const auto& va) {
                using V = std::decay_t<decltype(va)>;
                const auto& vb = std::get<V>(b.data);
                return va.size() == vb.size() &&
                       (va.empty() || std::memcmp(va.data(), vb.data(), va.size() * sizeof(va[0])) == 0);
            },
            a.data);
    }
};

namespace detail {

inline constexpr char kMagic[4] = {'N', 'V', 'T', 'F'};
inline constexpr std::uint32_t kTensorVersion = 1;

template <typename U>
void put_le(std::string& out, U value) {
    for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<char>((value >> (8 * i)) & 0xFF));
}

template <typename U>
U get_le(const unsigned char* p) {
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(p[i]) << (8 * i);
    return v;
}

}  // namespace detail

/// Serializes to NVTF bytes.
inline std::string encode_tensor(const Tensor& t) {
    if (t.dims.size() > 255) throw FormatError(FormatErrorKind::malformed, "tensor has more than 255 dims");
    if (t.stored_count() != t.element_count())
        throw ShapeError("tensor payload vs dims", t.element_count(), t.stored_count());
    std::string out(detail::kMagic, 4);
    detail::put_le<std::uint32_t>(out, detail::kTensorVersion);
    out.push_back(static_cast<char>(t.dtype()));
    out.push_back(static_cast<char>(t.dims.size()));
    for (auto d : t.dims) detail::put_le<std::uint64_t>(out, d);
    out.reserve(out.size() + t.element_count() * element_size(t.dtype()));
    std::visit(
        [&](const auto& values) {
            for (const auto& x : values) {
                using E = std::decay_t<decltype(x)>;
                if constexpr (std::is_same_v<E, float>) detail::put_le(out, std::bit_cast<std::uint32_t>(x));
                else detail::put_le(out, std::bit_cast<std::uint64_t>(x));
            }
        },
        t.data);
    return out;
}

/// Parses NVTF bytes; every structural problem maps to a distinct FormatErrorKind.
inline Tensor decode_tensor(std::string_view bytes) {
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    const std::size_t n = bytes.size();
    if (n < 4) throw FormatError(FormatErrorKind::truncated, "file shorter than the magic number");
    if (std::memcmp(p, detail::kMagic, 4) != 0) throw FormatError(FormatErrorKind::bad_magic, "magic is not 'NVTF'");
    if (n < 10) throw FormatError(FormatErrorKind::truncated, "header truncated");
    const auto version = detail::get_le<std::uint32_t>(p + 4);
    if (version != detail::kTensorVersion)
        throw FormatError(FormatErrorKind::unsupported_version, "version " + std::to_string(version));
    const std::uint8_t code = p[8];
    if (code > 2) throw FormatError(FormatErrorKind::unsupported_dtype, "dtype code " + std::to_string(code));
    const auto dtype = static_cast<DType>(code);
    const std::size_t ndim = p[9];
    const std::size_t header = 10 + 8 * ndim;
    if (n < header) throw FormatError(FormatErrorKind::truncated, "dims truncated");

    Tensor t;
    for (std::size_t i = 0; i < ndim; ++i) t.dims.push_back(detail::get_le<std::uint64_t>(p + 10 + 8 * i));
    const std::size_t count = t.element_count();
    const std::size_t esize = element_size(dtype);
    if (count > (std::numeric_limits<std::size_t>::max() - header) / esize)
        throw FormatError(FormatErrorKind::malformed, "payload size overflows");
    const std::size_t expected = header + count * esize;
    if (n < expected)
        throw FormatError(FormatErrorKind::truncated, "payload has " + std::to_string(n - header) + " bytes, expected " +
                                                          std::to_string(count * esize));
    if (n > expected) throw FormatError(FormatErrorKind::trailing_bytes, std::to_string(n - expected) + " extra bytes");

    const unsigned char* payload = p + header;
    switch (dtype) {
        case DType::f32: {
            std::vector<float> v(count);
            for (std::size_t i = 0; i < count; ++i) v[i] = std::bit_cast<float>(detail::get_le<std::uint32_t>(payload + 4 * i));
            t.data = std::move(v);
            break;
        }
        case DType::f64: {
            std::vector<double> v(count);
            for (std::size_t i = 0; i < count; ++i) v[i] = std::bit_cast<double>(detail::get_le<std::uint64_t>(payload + 8 * i));
            t.data = std::move(v);
            break;
        }
        case DType::i64: {
            std::vector<std::int64_t> v(count);
            for (std::size_t i = 0; i < count; ++i) v[i] = std::bit_cast<std::int64_t>(detail::get_le<std::uint64_t>(payload + 8 * i));
            t.data = std::move(v);
            break;
        }
    }
    return t;
}

namespace fs = std::filesystem;

inline std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError(FormatErrorKind::io, "cannot open '" + path.string() + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Writes via a temporary sibling and a rename.
inline void write_file_atomic(const fs::path& path, std::string_view bytes) {
    std::error_code ec;
    if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw FormatError(FormatErrorKind::io, "cannot write '" + tmp.string() + "'");
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw FormatError(FormatErrorKind::io, "write failed for '" + tmp.string() + "'");
    }
    fs::rename(tmp, path, ec);
    if (ec) throw FormatError(FormatErrorKind::io, "cannot rename into '" + path.string() + "': " + ec.message());
}

inline void write_tensor(const fs::path& path, const Tensor& t) { write_file_atomic(path, encode_tensor(t)); }

inline Tensor read_tensor(const fs::path& path) { return decode_tensor(read_file(path)); }

/// 64-bit FNV-1a, used as a content digest in metadata.
inline std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = digits[v & 0xF];
    return s;
}

// ---------------------------------------------------------------------------
// embeddings

inline Tensor embedding_tensor(const Embedding& e, DType dtype = DType::f64) {
    std::vector<std::uint64_t> dims{e.shape().tokens, e.shape().dim};
    if (dtype == DType::f32) return Tensor::f32(dims, std::vector<float>(e.flat().begin(), e.flat().end()));
    if (dtype == DType::f64) return Tensor::f64(dims, e.values());
    throw InvalidArgument("embeddings are stored as f32 or f64");
}

inline Embedding embedding_from_tensor(const Tensor& t) {
    if (t.dims.size() != 2) throw FormatError(FormatErrorKind::dim_mismatch, "embedding tensor must be [tokens, dim]");
    if (t.dtype() == DType::i64) throw FormatError(FormatErrorKind::unsupported_dtype, "embedding tensor must be f32 or f64");
    return {EmbeddingShape{t.dims[0], t.dims[1]}, t.as_f64()};
}

inline void write_embedding(const fs::path& path, const Embedding& e, DType dtype = DType::f64) {
    write_tensor(path, embedding_tensor(e, dtype));
}

inline Embedding read_embedding(const fs::path& path) { return embedding_from_tensor(read_tensor(path)); }

/// Stack of same-shape embeddings as one [n, tokens, dim] tensor.
inline void write_embeddings(const fs::path& path, std::span<const Embedding> es) {
    if (es.empty()) throw InvalidArgument("no embeddings to write");
    const auto shape = es.front().shape();
    std::vector<double> flat;
    flat.reserve(es.size() * shape.size());
    for (const auto& e : es) {
        if (e.shape() != shape) throw ShapeError("embedding stack with mixed shapes");
        flat.insert(flat.end(), e.flat().begin(), e.flat().end());
    }
    write_tensor(path, Tensor::f64({es.size(), shape.tokens, shape.dim}, std::move(flat)));
}

/// Reads a [tokens, dim] file as one embedding or an [n, tokens, dim] stack.
inline std::vector<Embedding> read_embeddings(const fs::path& path) {
    const auto t = read_tensor(path);
    if (t.dims.size() == 2) return {embedding_from_tensor(t)};
    if (t.dims.size() != 3) throw FormatError(FormatErrorKind::dim_mismatch, "embedding stack must be [n, tokens, dim]");
    if (t.dtype() == DType::i64) throw FormatError(FormatErrorKind::unsupported_dtype, "embedding stack must be f32 or f64");
    const EmbeddingShape shape{t.dims[1], t.dims[2]};
    const auto values = t.as_f64();
    std::vector<Embedding> out;
    for (std::size_t i = 0; i < t.dims[0]; ++i) {
        const auto first = values.begin() + static_cast<std::ptrdiff_t>(i * shape.size());
        out.emplace_back(shape, std::vector<double>(first, first + static_cast<std::ptrdiff_t>(shape.size())));
    }
    return out;
}

// ---------------------------------------------------------------------------
// checkpoints

struct CheckpointInfo {
    std::optional<EmbeddingShape> shape;
    std::optional<TrainConfig> config;
    std::vector<EpochRecord> log;
    int best_epoch = 0;
};

inline std::string weight_name(std::size_t layer) { return "layer" + std::to_string(layer) + ".weight"; }
inline std::string bias_name(std::size_t layer) { return "layer" + std::to_string(layer) + ".bias"; }

/// CSV training log: epoch,train_mse,val_mean_r.
inline std::string training_log_csv(std::span<const EpochRecord> log) {
    std::string out = "epoch,train_mse,val_mean_r\n";
    for (const auto& r : log)
        out += std::to_string(r.epoch) + "," + detail::format_double(r.train_mse) + "," + detail::format_double(r.val_mean_r) + "\n";
    return out;
}

namespace detail {

inline std::string join_sizes(std::span<const std::size_t> xs) {
    std::string s;
    for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? "," : "") + std::to_string(xs[i]);
    return s;
}

inline std::vector<std::size_t> split_sizes(const std::string& text) {
    std::vector<std::size_t> out;
    if (text.empty()) return out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto comma = text.find(',', pos);
        if (comma == std::string::npos) comma = text.size();
        std::size_t v = 0;
        auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + comma, v);
        if (ec != std::errc{} || ptr != text.data() + comma)
            throw FormatError(FormatErrorKind::malformed, "bad integer list '" + text + "'");
        out.push_back(v);
        pos = comma + 1;
    }
    return out;
}

}  // namespace detail

inline void save_checkpoint(const fs::path& dir, const EncoderModel& model, const CheckpointInfo& info = {}) {
    model.validate();
    KeyValueDoc meta;
    auto& head = meta.add("checkpoint");
    head.set("format", "nvolve-checkpoint");
    head.set("version", 1);
    auto& arch = meta.add("architecture");
    arch.set("input_len", std::uint64_t{model.arch.input_len});
    arch.set("hidden", detail::join_sizes(model.arch.hidden));
    arch.set("n_voxels", std::uint64_t{model.arch.n_voxels});
    if (info.shape) {
        auto& emb = meta.add("embedding");
        emb.set("tokens", std::uint64_t{info.shape->tokens});
        emb.set("dim", std::uint64_t{info.shape->dim});
    }
    if (info.config) {
        const auto& c = *info.config;
        auto& tr = meta.add("training");
        tr.set("learning_rate", c.learning_rate);
        tr.set("max_epochs", c.max_epochs);
        tr.set("patience", c.patience);
        tr.set("batch_size", std::uint64_t{c.batch_size});
        tr.set("weight_decay", c.weight_decay);
        tr.set("beta1", c.beta1);
        tr.set("beta2", c.beta2);
        tr.set("epsilon", c.epsilon);
        tr.set("seed", c.seed);
        tr.set("best_epoch", info.best_epoch);
        tr.set("epochs_run", static_cast<int>(info.log.size()));
        tr.set("metric_digest", hex64(fnv1a64(training_log_csv(info.log))));
    }
    auto& tensors = meta.add("tensors");
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        const auto& layer = model.layers[l];
        write_tensor(dir / (weight_name(l) + ".nvtf"), Tensor::f64({layer.out, layer.in}, layer.weight));
        write_tensor(dir / (bias_name(l) + ".nvtf"), Tensor::f64({layer.out}, layer.bias));
        tensors.set(weight_name(l), weight_name(l) + ".nvtf");
        tensors.set(bias_name(l), bias_name(l) + ".nvtf");
    }
    write_file_atomic(dir / "metadata.txt", format_keyvalue(meta));
}

struct LoadedCheckpoint {
    EncoderModel model;
    std::optional<EmbeddingShape> shape;
    KeyValueDoc metadata;
};

/// Loads and fully validates a checkpoint before returning it.
inline LoadedCheckpoint load_checkpoint(const fs::path& dir) {
    LoadedCheckpoint out;
    out.metadata = parse_keyvalue(read_file(dir / "metadata.txt"));
    const auto& head = out.metadata.section("checkpoint");
    if (head.get("format") != "nvolve-checkpoint") throw FormatError(FormatErrorKind::malformed, "not a checkpoint");
    if (head.get_number<int>("version") != 1) throw FormatError(FormatErrorKind::unsupported_version, "checkpoint version");

    const auto& a = out.metadata.section("architecture");
    EncoderArchitecture arch;
    arch.input_len = a.get_number<std::size_t>("input_len");
    arch.hidden = detail::split_sizes(a.get("hidden"));
    arch.n_voxels = a.get_number<std::size_t>("n_voxels");
    try {
        arch.validate();
    } catch (const InvalidArgument& e) {
        throw FormatError(FormatErrorKind::malformed, e.what());
    }
    if (const auto* emb = out.metadata.find("embedding")) {
        out.shape = EmbeddingShape{emb->get_number<std::size_t>("tokens"), emb->get_number<std::size_t>("dim")};
        if (out.shape->size() != arch.input_len)
            throw FormatError(FormatErrorKind::dim_mismatch, "embedding shape does not match input_len");
    }

    const auto& tensors = out.metadata.section("tensors");
    out.model = EncoderModel::zeros(arch);
    auto load = [&](const std::string& name, std::vector<std::uint64_t> dims) {
        const auto file = tensors.find(name);
        if (!file) throw FormatError(FormatErrorKind::missing_entry, "checkpoint is missing tensor '" + name + "'");
        const auto path = dir / *file;
        if (!fs::exists(path)) throw FormatError(FormatErrorKind::missing_entry, "checkpoint tensor file missing for '" + name + "'");
        auto t = read_tensor(path);
        if (t.dtype() != DType::f64) throw FormatError(FormatErrorKind::unsupported_dtype, "tensor '" + name + "' must be f64");
        if (t.dims != dims) throw FormatError(FormatErrorKind::dim_mismatch, "tensor '" + name + "' dims disagree with the architecture");
        return std::get<std::vector<double>>(std::move(t.data));
    };
    for (std::size_t l = 0; l < out.model.layers.size(); ++l) {
        auto& layer = out.model.layers[l];
        layer.weight = load(weight_name(l), {layer.out, layer.in});
        layer.bias = load(bias_name(l), {layer.out});
    }
    for (const auto& [name, _] : tensors.entries) {
        bool known = false;
        for (std::size_t l = 0; l < out.model.layers.size(); ++l) known = known || name == weight_name(l) || name == bias_name(l);
        if (!known) throw FormatError(FormatErrorKind::dim_mismatch, "tensor '" + name + "' is not part of the architecture");
    }
    out.model.validate();
    return out;
}

// ---------------------------------------------------------------------------
// datasets

inline void save_dataset(const fs::path& dir, const ResponseDataset& ds) {
    ds.validate();
    write_embeddings(dir / "embeddings.nvtf", ds.embeddings);
    write_tensor(dir / "responses.nvtf", Tensor::f64({ds.responses.rows, ds.responses.cols}, ds.responses.data));
    write_tensor(dir / "sessions.nvtf", Tensor::i64({ds.session_ids.size()}, ds.session_ids));
}

inline ResponseDataset load_dataset(const fs::path& dir) {
    ResponseDataset ds;
    ds.embeddings = read_embeddings(dir / "embeddings.nvtf");
    ds.shape = ds.embeddings.front().shape();
    const auto r = read_tensor(dir / "responses.nvtf");
    if (r.dims.size() != 2 || r.dtype() != DType::f64) throw FormatError(FormatErrorKind::dim_mismatch, "responses must be f64 [n, voxels]");
    ds.responses = Matrix(r.dims[0], r.dims[1], std::get<std::vector<double>>(r.data));
    const auto s = read_tensor(dir / "sessions.nvtf");
    if (s.dims.size() != 1 || s.dtype() != DType::i64) throw FormatError(FormatErrorKind::dim_mismatch, "sessions must be i64 [n]");
    ds.session_ids = std::get<std::vector<std::int64_t>>(s.data);
    try {
        ds.validate();
    } catch (const ShapeError& e) {
        throw FormatError(FormatErrorKind::dim_mismatch, e.what());
    }
    return ds;
}

// ---------------------------------------------------------------------------
// atlases and synthetic subjects

inline void write_atlas(const fs::path& path, const RoiAtlas& atlas) { write_file_atomic(path, format_atlas(atlas)); }

inline RoiAtlas read_atlas(const fs::path& path) { return parse_atlas(read_file(path)); }

inline void save_subject(const fs::path& dir, const SyntheticSubject& s) {
    KeyValueDoc meta;
    auto& sec = meta.add("subject");
    sec.set("tokens", std::uint64_t{s.shape.tokens});
    sec.set("dim", std::uint64_t{s.shape.dim});
    sec.set("n_voxels", std::uint64_t{s.n_voxels});
    sec.set("noise_sigma", s.noise_sigma);
    sec.set("nonlinearity", to_string(s.nonlinearity));
    std::string order;
    for (std::size_t i = 0; i < s.region_order.size(); ++i) order += (i ? "," : "") + s.region_order[i];
    sec.set("regions", order);
    write_atlas(dir / "atlas.txt", s.atlas);
    write_tensor(dir / "directions.nvtf", Tensor::f64({s.directions.rows, s.directions.cols}, s.directions.data));
    write_tensor(dir / "tuning.nvtf", Tensor::f64({s.tuning.rows, s.tuning.cols}, s.tuning.data));
    write_tensor(dir / "biases.nvtf", Tensor::f64({s.biases.size()}, s.biases));
    write_file_atomic(dir / "subject.txt", format_keyvalue(meta));
}

inline SyntheticSubject load_subject(const fs::path& dir) {
    const auto meta = parse_keyvalue(read_file(dir / "subject.txt"));
    const auto& sec = meta.section("subject");
    SyntheticSubject s;
    s.shape = {sec.get_number<std::size_t>("tokens"), sec.get_number<std::size_t>("dim")};
    s.n_voxels = sec.get_number<std::size_t>("n_voxels");
    s.noise_sigma = sec.get_number<double>("noise_sigma");
    s.nonlinearity = parse_nonlinearity(sec.get("nonlinearity"));
    const auto& order = sec.get("regions");
    for (std::size_t pos = 0; pos <= order.size();) {
        auto comma = order.find(',', pos);
        if (comma == std::string::npos) comma = order.size();
        s.region_order.push_back(order.substr(pos, comma - pos));
        pos = comma + 1;
    }
    s.atlas = read_atlas(dir / "atlas.txt");
    auto matrix = [&](const char* file, std::size_t rows, std::size_t cols) {
        const auto t = read_tensor(dir / file);
        if (t.dtype() != DType::f64 || t.dims != std::vector<std::uint64_t>{rows, cols})
            throw FormatError(FormatErrorKind::dim_mismatch, std::string(file) + " has unexpected dims");
        return Matrix(rows, cols, std::get<std::vector<double>>(t.data));
    };
    s.directions = matrix("directions.nvtf", s.region_order.size(), s.shape.size());
    s.tuning = matrix("tuning.nvtf", s.n_voxels, s.shape.size());
    const auto b = read_tensor(dir / "biases.nvtf");
    if (b.dtype() != DType::f64 || b.dims != std::vector<std::uint64_t>{s.n_voxels})
        throw FormatError(FormatErrorKind::dim_mismatch, "biases.nvtf has unexpected dims");
    s.biases = std::get<std::vector<double>>(b.data);
    return s;
}

// ---------------------------------------------------------------------------
// trajectories

inline std::string step_file_name(int step) {
    std::string digits = std::to_string(step);
    if (digits.size() < 6) digits.insert(0, 6 - digits.size(), '0');
    return "embeddings/step_" + digits + ".nvtf";
}

/// Writes manifest.txt plus one tensor file per recorded embedding.
inline void export_trajectory(const Trajectory& traj, const fs::path& dir, DType dtype = DType::f64) {
    traj.validate();
    KeyValueDoc manifest;
    auto& head = manifest.add("trajectory");
    head.set("format", "nvolve-trajectory");
    head.set("version", 1);
    head.set("objective", traj.objective);
    head.set("tokens", std::uint64_t{traj.shape.tokens});
    head.set("dim", std::uint64_t{traj.shape.dim});
    head.set("points", std::uint64_t{traj.points.size()});
    head.set("dtype", to_string(dtype));
    auto& cfg = manifest.add("config");
    cfg.set("steps", traj.config.steps);
    cfg.set("learning_rate", traj.config.learning_rate);
    cfg.set("beta1", traj.config.beta1);
    cfg.set("beta2", traj.config.beta2);
    cfg.set("epsilon", traj.config.epsilon);
    cfg.set("record_every", traj.config.record_every);
    cfg.set("seed", traj.config.seed);

    const auto best = traj.best_loss_so_far();
    for (std::size_t i = 0; i < traj.points.size(); ++i) {
        const auto& p = traj.points[i];
        auto& sec = manifest.add("point");
        sec.set("step", p.step);
        sec.set("loss", p.loss);
        sec.set("best_loss", best[i]);
        for (const auto& [region, mean] : p.region_means) sec.set("region." + region, mean);
        if (p.embedding) {
            const auto rel = step_file_name(p.step);
            write_embedding(dir / rel, *p.embedding, dtype);
            sec.set("embedding", rel);
        }
    }
    write_file_atomic(dir / "manifest.txt", format_keyvalue(manifest));
}

inline Trajectory import_trajectory(const fs::path& dir) {
    const auto manifest = parse_keyvalue(read_file(dir / "manifest.txt"));
    const auto& head = manifest.section("trajectory");
    if (head.get("format") != "nvolve-trajectory") throw FormatError(FormatErrorKind::malformed, "not a trajectory manifest");
    if (head.get_number<int>("version") != 1) throw FormatError(FormatErrorKind::unsupported_version, "trajectory version");

    Trajectory traj;
    traj.objective = head.get("objective");
    traj.shape = {head.get_number<std::size_t>("tokens"), head.get_number<std::size_t>("dim")};
    const auto& cfg = manifest.section("config");
    traj.config.steps = cfg.get_number<int>("steps");
    traj.config.learning_rate = cfg.get_number<double>("learning_rate");
    traj.config.beta1 = cfg.get_number<double>("beta1");
    traj.config.beta2 = cfg.get_number<double>("beta2");
    traj.config.epsilon = cfg.get_number<double>("epsilon");
    traj.config.record_every = cfg.get_number<int>("record_every");
    traj.config.seed = cfg.get_number<std::uint64_t>("seed");

    for (const auto* sec : manifest.all("point")) {
        TrajectoryPoint p;
        p.step = sec->get_number<int>("step");
        p.loss = sec->get_number<double>("loss");
        if (!traj.points.empty() && p.step <= traj.points.back().step)
            throw FormatError(FormatErrorKind::non_monotone, "step " + std::to_string(p.step) + " does not increase");
        for (const auto& [key, _] : sec->entries)
            if (key.rfind("region.", 0) == 0) p.region_means.emplace(key.substr(7), sec->get_number<double>(key));
        if (const auto rel = sec->find("embedding")) {
            const auto path = dir / *rel;
            if (!fs::exists(path))
                throw FormatError(FormatErrorKind::dangling_reference, "manifest references missing file '" + *rel + "'");
            p.embedding = read_embedding(path);
            if (p.embedding->shape() != traj.shape)
                throw FormatError(FormatErrorKind::dim_mismatch, "embedding '" + *rel + "' has shape " + to_string(p.embedding->shape()));
        }
        traj.points.push_back(std::move(p));
    }
    if (traj.points.size() != head.get_number<std::size_t>("points"))
        throw FormatError(FormatErrorKind::malformed, "manifest point count disagrees with its records");
    try {
        traj.validate();
    } catch (const InvalidArgument& e) {
        throw FormatError(FormatErrorKind::malformed, e.what());
    }
    return traj;
}

}  // namespace nvolve
