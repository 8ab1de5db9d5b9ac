#include "fmseg/checkpoint.hpp"

#include <json.hpp>

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace fmseg {

namespace {

using nlohmann::json;

constexpr char kMagic[8] = {'F', 'M', 'S', 'E', 'G', 'C', 'K', '1'};

json model_to_json(const ModelConfig& m) {
    return json{{"depth", m.depth},
                {"base_channels", m.base_channels},
                {"in_channels", m.in_channels},
                {"image_size", m.image_size},
                {"attention_enabled", m.attention_enabled},
                {"max_channels", m.max_channels},
                {"attention_reduction", m.attention_reduction},
                {"norm_enabled", m.norm_enabled}};
}

ModelConfig model_from_json(const json& j) {
    ModelConfig m;
    m.depth = j.at("depth").get<int>();
    m.base_channels = j.at("base_channels").get<int>();
    m.in_channels = j.at("in_channels").get<int>();
    m.image_size = j.at("image_size").get<int>();
    m.attention_enabled = j.at("attention_enabled").get<bool>();
    m.max_channels = j.at("max_channels").get<int>();
    m.attention_reduction = j.at("attention_reduction").get<int>();
    m.norm_enabled = j.at("norm_enabled").get<bool>();
    return m;
}

json describe_tensors(const std::map<std::string, Tensor>& tensors, std::uint64_t& offset) {
    json arr = json::array();
    for (const auto& [name, t] : tensors) {
        arr.push_back({{"name", name}, {"shape", t.shape()}, {"offset", offset}});
        offset += t.size();
    }
    return arr;
}

void write_tensors(std::ofstream& out, const std::map<std::string, Tensor>& tensors) {
    for (const auto& [name, t] : tensors)
        out.write(reinterpret_cast<const char*>(t.data()),
                  static_cast<std::streamsize>(t.size() * sizeof(real)));
}

std::map<std::string, Tensor> read_tensors(const json& arr, const std::vector<real>& blob) {
    std::map<std::string, Tensor> out;
    for (const json& e : arr) {
        std::vector<std::size_t> shape = e.at("shape").get<std::vector<std::size_t>>();
        std::uint64_t offset = e.at("offset").get<std::uint64_t>();
        Tensor t(shape);
        if (offset + t.size() > blob.size())
            throw std::runtime_error("checkpoint: tensor data out of range");
        std::memcpy(t.data(), blob.data() + offset, t.size() * sizeof(real));
        out.emplace(e.at("name").get<std::string>(), std::move(t));
    }
    return out;
}

}  // namespace

Checkpoint snapshot(CoupledNetwork& net, std::uint64_t seed, int epoch, Adam* optimizer) {
    Checkpoint c;
    c.model = net.config();
    c.seed = seed;
    c.epoch = epoch;
    for (const ParamRef& p : net.parameters()) c.params.emplace(p.name, *p.value);
    if (optimizer) {
        c.has_optimizer = true;
        c.adam_t = optimizer->steps_taken();
        const auto& refs = optimizer->params();
        for (std::size_t i = 0; i < refs.size(); ++i) {
            c.adam_m.emplace(refs[i].name, optimizer->first_moments()[i]);
            c.adam_v.emplace(refs[i].name, optimizer->second_moments()[i]);
        }
    }
    return c;
}

void restore_parameters(const Checkpoint& ckpt, CoupledNetwork& net) {
    std::vector<ParamRef> refs = net.parameters();
    if (refs.size() != ckpt.params.size())
        throw std::runtime_error("checkpoint: parameter set does not match network");
    for (const ParamRef& p : refs) {
        auto it = ckpt.params.find(p.name);
        if (it == ckpt.params.end())
            throw std::runtime_error("checkpoint: missing parameter " + p.name);
        if (!p.value->same_shape(it->second))
            throw std::runtime_error("checkpoint: shape mismatch for " + p.name);
        *p.value = it->second;
    }
}

void restore_optimizer(const Checkpoint& ckpt, Adam& optimizer) {
    if (!ckpt.has_optimizer)
        throw std::runtime_error("checkpoint: no optimizer state stored");
    optimizer.set_steps_taken(ckpt.adam_t);
    const auto& refs = optimizer.params();
    for (std::size_t i = 0; i < refs.size(); ++i) {
        auto im = ckpt.adam_m.find(refs[i].name);
        auto iv = ckpt.adam_v.find(refs[i].name);
        if (im == ckpt.adam_m.end() || iv == ckpt.adam_v.end())
            throw std::runtime_error("checkpoint: missing optimizer state for " + refs[i].name);
        optimizer.first_moments()[i] = im->second;
        optimizer.second_moments()[i] = iv->second;
    }
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    std::uint64_t offset = 0;
    json header;
    header["format"] = 1;
    header["model"] = model_to_json(ckpt.model);
    header["seed"] = ckpt.seed;
    header["epoch"] = ckpt.epoch;
    header["val_dice"] = ckpt.val_dice;
    header["val_mcc"] = ckpt.val_mcc;
    header["params"] = describe_tensors(ckpt.params, offset);
    if (ckpt.has_optimizer) {
        header["adam_t"] = ckpt.adam_t;
        header["adam_m"] = describe_tensors(ckpt.adam_m, offset);
        header["adam_v"] = describe_tensors(ckpt.adam_v, offset);
    }
    const std::string htext = header.dump();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("checkpoint: cannot open for writing: " + path);
    out.write(kMagic, sizeof(kMagic));
    const std::uint64_t hlen = htext.size();
    out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
    out.write(htext.data(), static_cast<std::streamsize>(htext.size()));
    write_tensors(out, ckpt.params);
    if (ckpt.has_optimizer) {
        write_tensors(out, ckpt.adam_m);
        write_tensors(out, ckpt.adam_v);
    }
    if (!out) throw std::runtime_error("checkpoint: write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("checkpoint: cannot open: " + path);
    char magic[sizeof(kMagic)];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw std::runtime_error("checkpoint: bad magic: " + path);
    std::uint64_t hlen = 0;
    in.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
    std::string htext(hlen, '\0');
    in.read(htext.data(), static_cast<std::streamsize>(hlen));
    if (!in) throw std::runtime_error("checkpoint: truncated header: " + path);
    json header = json::parse(htext);

    std::vector<real> blob;
    {
        std::vector<char> raw((std::istreambuf_iterator<char>(in)),
                              std::istreambuf_iterator<char>());
        if (raw.size() % sizeof(real) != 0)
            throw std::runtime_error("checkpoint: corrupt data section: " + path);
        blob.resize(raw.size() / sizeof(real));
        std::memcpy(blob.data(), raw.data(), raw.size());
    }

    Checkpoint c;
    c.model = model_from_json(header.at("model"));
    c.seed = header.at("seed").get<std::uint64_t>();
    c.epoch = header.at("epoch").get<int>();
    c.val_dice = header.at("val_dice").get<double>();
    c.val_mcc = header.at("val_mcc").get<double>();
    c.params = read_tensors(header.at("params"), blob);
    if (header.contains("adam_t")) {
        c.has_optimizer = true;
        c.adam_t = header.at("adam_t").get<std::int64_t>();
        c.adam_m = read_tensors(header.at("adam_m"), blob);
        c.adam_v = read_tensors(header.at("adam_v"), blob);
    }
    return c;
}

}  // namespace fmseg
