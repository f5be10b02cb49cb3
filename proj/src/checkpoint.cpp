#include "ddi/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ddi {
namespace {

constexpr const char* kFormatTag = "ddi-lstm-checkpoint";
constexpr int kFormatVersion = 1;

void append_f32_le(std::string& out, float value) {
    const auto bits = std::bit_cast<std::uint32_t>(value);
    for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xffu));
}

float read_f32_le(const unsigned char* p) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(p[b]) << (8 * b);
    return std::bit_cast<float>(bits);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out) throw std::runtime_error("short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

template <typename Real>
void save_checkpoint(const std::filesystem::path& dir, const ModelConfig& cfg,
                     ModelParams<Real>& params, const Vocabulary& vocab) {
    std::filesystem::create_directories(dir);
    nlohmann::json manifest;
    manifest["format"] = kFormatTag;
    manifest["version"] = kFormatVersion;
    manifest["config"] = to_json(cfg);
    manifest["parameters"] = nlohmann::json::array();
    std::string blob;
    for (auto& p : params.parameters()) {
        manifest["parameters"].push_back({{"name", p.name}, {"shape", p.tensor->shape()}});
        for (Real v : p.tensor->data()) append_f32_le(blob, static_cast<float>(v));
    }
    std::ostringstream vocab_text;
    for (const auto& t : vocab.tokens()) vocab_text << t << '\n';

    write_file_atomic(dir / "params.bin", blob);
    write_file_atomic(dir / "vocab", vocab_text.str());
    write_file_atomic(dir / "manifest", manifest.dump(2) + "\n");
}

template <typename Real>
Checkpoint<Real> load_checkpoint(const std::filesystem::path& dir) {
    const auto manifest = nlohmann::json::parse(read_file(dir / "manifest"));
    if (manifest.value("format", "") != kFormatTag) {
        throw std::runtime_error(dir.string() + " is not a checkpoint directory");
    }
    if (manifest.value("version", 0) != kFormatVersion) {
        throw std::runtime_error("unsupported checkpoint version in " + dir.string());
    }
    Checkpoint<Real> ck{model_config_from_json(manifest.at("config")), {},
                        Vocabulary::load(dir / "vocab")};
    if (ck.vocab.size() != ck.config.word_vocab_size) {
        throw std::runtime_error("checkpoint vocabulary size disagrees with its config");
    }
    // The init stream is irrelevant: every value is overwritten below.
    Rng scratch(0);
    ck.params = ModelParams<Real>::init(ck.config, scratch);

    const std::string blob = read_file(dir / "params.bin");
    const auto* bytes = reinterpret_cast<const unsigned char*>(blob.data());
    std::size_t offset = 0;
    auto params = ck.params.parameters();
    const auto& listed = manifest.at("parameters");
    if (listed.size() != params.size()) {
        throw std::runtime_error("checkpoint lists " + std::to_string(listed.size()) +
                                 " parameters, model has " + std::to_string(params.size()));
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& p = params[i];
        const auto name = listed[i].at("name").get<std::string>();
        const auto shape = listed[i].at("shape").get<Shape>();
        if (name != p.name || shape != p.tensor->shape()) {
            throw std::runtime_error("checkpoint parameter " + std::to_string(i) + " is " + name +
                                     shape_to_string(shape) + ", expected " + p.name +
                                     shape_to_string(p.tensor->shape()));
        }
        auto data = p.tensor->data();
        if (offset + 4 * data.size() > blob.size()) {
            throw std::runtime_error("params.bin is truncated at " + name);
        }
        for (auto& v : data) {
            v = static_cast<Real>(read_f32_le(bytes + offset));
            offset += 4;
        }
        if (!p.tensor->all_finite()) throw NonFiniteError("non-finite value in " + name);
    }
    if (offset != blob.size()) throw std::runtime_error("params.bin has trailing bytes");
    return ck;
}

template void save_checkpoint(const std::filesystem::path&, const ModelConfig&,
                              ModelParams<float>&, const Vocabulary&);
template void save_checkpoint(const std::filesystem::path&, const ModelConfig&,
                              ModelParams<double>&, const Vocabulary&);
template Checkpoint<float> load_checkpoint(const std::filesystem::path&);
template Checkpoint<double> load_checkpoint(const std::filesystem::path&);

}  // namespace ddi
