#include "isa2/model_io.hpp"

#include <array>
#include <fstream>
#include <iterator>

#include "byte_io.hpp"
#include "isa2/error.hpp"

namespace isa2 {

using detail::ByteReader;
using detail::put_le;

namespace {

constexpr std::array<char, 8> kModelMagic = {'I', 'S', 'A', '2', 'M', 'O', 'D', 'L'};
constexpr std::uint32_t kModelVersion = 1;

enum class KindTag : std::uint8_t { Linear = 1, Boosted = 2, Mlp = 3 };

void put_doubles(std::string& out, const std::vector<double>& values) {
    put_le(out, static_cast<std::uint64_t>(values.size()));
    for (const double v : values) put_le(out, v);
}

std::vector<double> get_doubles(ByteReader& in) {
    const auto count = in.get<std::uint64_t>();
    if (count > in.remaining() / 8) throw DataError(in.context() + ": array length exceeds file size");
    std::vector<double> values(count);
    for (auto& v : values) v = in.get<double>();
    return values;
}

void put_payload(std::string& out, const LinearModel& m) {
    put_le(out, static_cast<std::uint8_t>(m.kind));
    put_le(out, static_cast<std::uint8_t>(m.converged ? 1 : 0));
    put_le(out, static_cast<std::int32_t>(m.iterations));
    put_le(out, m.bias);
    put_doubles(out, m.weights);
    put_doubles(out, m.hyperparameters);
}

void put_payload(std::string& out, const BoostedModel& m) {
    put_le(out, static_cast<std::uint64_t>(m.dimension));
    put_le(out, m.base_prediction);
    put_le(out, m.shrinkage);
    put_le(out, static_cast<std::int32_t>(m.max_depth));
    put_le(out, static_cast<std::int32_t>(m.tree_count));
    put_le(out, static_cast<std::uint32_t>(m.trees.size()));
    for (const auto& tree : m.trees) {
        put_le(out, static_cast<std::uint32_t>(tree.nodes.size()));
        for (const auto& node : tree.nodes) {
            put_le(out, static_cast<std::int32_t>(node.feature));
            put_le(out, node.threshold);
            put_le(out, static_cast<std::int32_t>(node.left));
            put_le(out, static_cast<std::int32_t>(node.right));
            put_le(out, node.value);
        }
    }
}

void put_payload(std::string& out, const MlpModel& m) {
    put_le(out, static_cast<std::uint64_t>(m.input_dim));
    put_le(out, static_cast<std::uint64_t>(m.hidden));
    put_doubles(out, m.w1);
    put_doubles(out, m.b1);
    put_doubles(out, m.w2);
    put_le(out, m.b2);
    put_doubles(out, m.loss_curve);
}

LinearModel get_linear(ByteReader& in) {
    LinearModel m;
    const auto kind = in.get<std::uint8_t>();
    if (kind > static_cast<std::uint8_t>(LinearKind::Svr)) throw DataError(in.context() + ": unknown linear kind");
    m.kind = static_cast<LinearKind>(kind);
    m.converged = in.get<std::uint8_t>() != 0;
    m.iterations = in.get<std::int32_t>();
    m.bias = in.get<double>();
    m.weights = get_doubles(in);
    m.hyperparameters = get_doubles(in);
    return m;
}

BoostedModel get_boosted(ByteReader& in) {
    BoostedModel m;
    m.dimension = in.get<std::uint64_t>();
    m.base_prediction = in.get<double>();
    m.shrinkage = in.get<double>();
    m.max_depth = in.get<std::int32_t>();
    m.tree_count = in.get<std::int32_t>();
    const auto trees = in.get<std::uint32_t>();
    for (std::uint32_t t = 0; t < trees; ++t) {
        RegressionTree tree;
        const auto nodes = in.get<std::uint32_t>();
        if (nodes == 0 || nodes > in.remaining() / 28) throw DataError(in.context() + ": bad tree size");
        for (std::uint32_t k = 0; k < nodes; ++k) {
            TreeNode node;
            node.feature = in.get<std::int32_t>();
            node.threshold = in.get<double>();
            node.left = in.get<std::int32_t>();
            node.right = in.get<std::int32_t>();
            node.value = in.get<double>();
            const bool leaf = node.feature < 0;
            if (!leaf && (static_cast<std::size_t>(node.feature) >= m.dimension || node.left <= static_cast<std::int32_t>(k) ||
                          node.right <= static_cast<std::int32_t>(k) || node.left >= static_cast<std::int32_t>(nodes) ||
                          node.right >= static_cast<std::int32_t>(nodes))) {
                throw DataError(in.context() + ": corrupt tree node");
            }
            tree.nodes.push_back(node);
        }
        m.trees.push_back(std::move(tree));
    }
    return m;
}

MlpModel get_mlp(ByteReader& in) {
    MlpModel m;
    m.input_dim = in.get<std::uint64_t>();
    m.hidden = in.get<std::uint64_t>();
    m.w1 = get_doubles(in);
    m.b1 = get_doubles(in);
    m.w2 = get_doubles(in);
    m.b2 = in.get<double>();
    m.loss_curve = get_doubles(in);
    if (m.w1.size() != m.input_dim * m.hidden || m.b1.size() != m.hidden || m.w2.size() != m.hidden) {
        throw DataError(in.context() + ": MLP parameter counts inconsistent with widths");
    }
    return m;
}

}  // namespace

std::string serialize_model(const StoredModel& stored) {
    std::string out(kModelMagic.begin(), kModelMagic.end());
    put_le(out, kModelVersion);
    const KindTag tag = std::visit(
        [](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, LinearModel>) return KindTag::Linear;
            else if constexpr (std::is_same_v<T, BoostedModel>) return KindTag::Boosted;
            else return KindTag::Mlp;
        },
        stored.model);
    put_le(out, static_cast<std::uint8_t>(tag));
    put_le(out, static_cast<std::uint8_t>(stored.solver));
    put_le(out, static_cast<std::int32_t>(stored.levels));
    put_le(out, static_cast<std::int32_t>(stored.class_count));
    put_le(out, static_cast<std::uint32_t>(stored.config_text.size()));
    out += stored.config_text;
    std::visit([&](const auto& m) { put_payload(out, m); }, stored.model);
    return out;
}

StoredModel deserialize_model(const std::string& bytes, const std::string& context) {
    if (bytes.size() < kModelMagic.size() || !std::equal(kModelMagic.begin(), kModelMagic.end(), bytes.begin())) {
        throw DataError(context + ": not a model file (bad magic)");
    }
    ByteReader in(bytes, context);
    in.get_bytes(kModelMagic.size());
    const auto version = in.get<std::uint32_t>();
    if (version != kModelVersion) throw DataError(context + ": unsupported model version " + std::to_string(version));

    StoredModel stored;
    const auto tag = in.get<std::uint8_t>();
    const auto solver = in.get<std::uint8_t>();
    if (solver > static_cast<std::uint8_t>(SolverKind::Mlp)) throw DataError(context + ": unknown solver tag");
    stored.solver = static_cast<SolverKind>(solver);
    stored.levels = in.get<std::int32_t>();
    stored.class_count = in.get<std::int32_t>();
    if (stored.levels < 1 || stored.levels > kMaxPyramidLevels || stored.class_count < 1) {
        throw DataError(context + ": invalid levels/class_count");
    }
    const auto text_len = in.get<std::uint32_t>();
    stored.config_text = in.get_bytes(text_len);
    switch (static_cast<KindTag>(tag)) {
        case KindTag::Linear: stored.model = get_linear(in); break;
        case KindTag::Boosted: stored.model = get_boosted(in); break;
        case KindTag::Mlp: stored.model = get_mlp(in); break;
        default: throw DataError(context + ": unknown model kind tag " + std::to_string(tag));
    }
    if (in.remaining() != 0) throw DataError(context + ": trailing bytes after model payload");
    if (input_dimension(stored.model) != descriptor_length(stored.class_count, stored.levels)) {
        throw DataError(context + ": model dimension does not match class_count/levels");
    }
    return stored;
}

void save_model(const std::filesystem::path& path, const StoredModel& stored) {
    const std::string bytes = serialize_model(stored);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write model " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for " + path.string());
}

StoredModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open model " + path.string());
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize_model(bytes, path.string());
}

}  // namespace isa2
