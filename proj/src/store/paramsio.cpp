#include "planlab/store/paramsio.h"

#include <cstdint>
#include <fstream>

#include "nlohmann/json.hpp"

namespace planlab::store {

namespace {

using nlohmann::json;

constexpr char kMagic[8] = {'P', 'L', 'N', 'L', 'P', 'R', 'M', '1'};

void write_u64(std::ofstream& out, std::uint64_t value) {
    char bytes[8];
    for (int i = 0; i < 8; ++i) { bytes[i] = static_cast<char>((value >> (8 * i)) & 0xff); }
    out.write(bytes, 8);
}

auto read_u64(std::ifstream& in) -> std::uint64_t {
    char bytes[8];
    if (!in.read(bytes, 8)) { throw ParamsFormatError("truncated file"); }
    std::uint64_t value = 0;
    for (int i = 0; i < 8; ++i) {
        value |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[i])) << (8 * i);
    }
    return value;
}

void write_doubles(std::ofstream& out, const std::vector<double>& values) {
    write_u64(out, values.size());
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size() * sizeof(double)));
}

auto read_doubles(std::ifstream& in, std::uint64_t expected) -> std::vector<double> {
    const auto n = read_u64(in);
    if (n != expected) {
        throw ParamsFormatError("weight count mismatch: " + std::to_string(n) + " stored, " +
                                std::to_string(expected) + " expected");
    }
    std::vector<double> values(n);
    if (!in.read(reinterpret_cast<char*>(values.data()),
                 static_cast<std::streamsize>(n * sizeof(double)))) {
        throw ParamsFormatError("truncated weights");
    }
    return values;
}

}  // namespace

auto save_params(const model::ModelParams& params, const std::string& path) -> void {
    std::ofstream out(path, std::ios::binary);
    if (!out) { throw ParamsFormatError("cannot write " + path); }
    const json meta = {{"version", params.version},
                       {"feature_dim", params.feature_dim},
                       {"state_len_cap", params.state_len_cap},
                       {"vocab",
                        {{"tags", params.vocab.tags},
                         {"verbs", params.vocab.verbs},
                         {"objects", params.vocab.objects},
                         {"state_tokens", params.vocab.state_tokens},
                         {"receptacle_classes", params.vocab.receptacle_classes}}}};
    const auto text = meta.dump();
    out.write(kMagic, sizeof(kMagic));
    write_u64(out, text.size());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    write_doubles(out, params.action_w);
    write_doubles(out, params.state_w);
    if (!out) { throw ParamsFormatError("write failed: " + path); }
}

auto load_params(const std::string& path) -> model::ModelParams {
    std::ifstream in(path, std::ios::binary);
    if (!in) { throw ParamsFormatError("cannot read " + path); }
    char magic[8];
    if (!in.read(magic, sizeof(magic)) || !std::equal(magic, magic + 8, kMagic)) {
        throw ParamsFormatError("bad magic in " + path);
    }
    const auto meta_len = read_u64(in);
    std::string text(meta_len, '\0');
    if (!in.read(text.data(), static_cast<std::streamsize>(meta_len))) {
        throw ParamsFormatError("truncated metadata");
    }
    json meta;
    try {
        meta = json::parse(text);
    } catch (const json::exception& e) {
        throw ParamsFormatError(std::string("metadata is not valid JSON: ") + e.what());
    }

    model::ModelParams params;
    try {
        params.version = meta.at("version").get<std::string>();
        params.feature_dim = meta.at("feature_dim").get<int>();
        params.state_len_cap = meta.at("state_len_cap").get<int>();
        const auto& vocab = meta.at("vocab");
        params.vocab.tags = vocab.at("tags").get<std::vector<std::string>>();
        params.vocab.verbs = vocab.at("verbs").get<std::vector<std::string>>();
        params.vocab.objects = vocab.at("objects").get<std::vector<std::string>>();
        params.vocab.state_tokens = vocab.at("state_tokens").get<std::vector<std::string>>();
        params.vocab.receptacle_classes =
            vocab.at("receptacle_classes").get<std::vector<std::string>>();
    } catch (const json::exception& e) {
        throw ParamsFormatError(std::string("metadata field error: ") + e.what());
    }
    params.action_w = read_doubles(
        in, static_cast<std::uint64_t>(params.feature_dim) * params.action_cols());
    params.state_w =
        read_doubles(in, static_cast<std::uint64_t>(params.feature_dim) * params.state_cols());
    return params;
}

}  // namespace planlab::store
