#include "stt/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace stt {

namespace {

constexpr char MAGIC[8] = {'S', 'T', 'T', 'M', 'O', 'D', 'E', 'L'};
constexpr std::uint32_t VERSION = 1;

void putU32(std::ostream& out, std::uint32_t v) {
  char b[4] = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
               static_cast<char>((v >> 16) & 0xFF), static_cast<char>((v >> 24) & 0xFF)};
  out.write(b, 4);
}

std::uint32_t getU32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw DataError("checkpoint truncated");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void putFloats(std::ostream& out, const std::vector<float>& values) {
  for (float f : values) putU32(out, std::bit_cast<std::uint32_t>(f));
}

void getFloats(std::istream& in, std::vector<float>& values) {
  for (float& f : values) f = std::bit_cast<float>(getU32(in));
}

std::string configRecord(const ModelConfig& c) {
  std::ostringstream out;
  out << "d_model=" << c.d_model << "\n"
      << "n_layers_encoder=" << c.n_layers_encoder << "\n"
      << "n_layers_decoder=" << c.n_layers_decoder << "\n"
      << "n_heads=" << c.n_heads << "\n"
      << "ffn_width=" << c.ffn_width << "\n"
      << "max_relative_distance=" << c.max_relative_distance << "\n"
      << "max_segments=" << c.max_segments << "\n"
      << "dropout=" << c.dropout << "\n"
      << "pitch_vocab=" << c.pitch_vocab << "\n"
      << "duration_vocab=" << c.duration_vocab << "\n"
      << "scale_by_d_model=" << (c.scale_by_d_model ? 1 : 0) << "\n";
  return out.str();
}

ModelConfig parseConfigRecord(const std::string& record) {
  ModelConfig c;
  std::istringstream in(record);
  std::string line;
  while (std::getline(in, line)) {
    std::size_t eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string key = line.substr(0, eq);
    std::string val = line.substr(eq + 1);
    if (key == "d_model") c.d_model = std::stoi(val);
    else if (key == "n_layers_encoder") c.n_layers_encoder = std::stoi(val);
    else if (key == "n_layers_decoder") c.n_layers_decoder = std::stoi(val);
    else if (key == "n_heads") c.n_heads = std::stoi(val);
    else if (key == "ffn_width") c.ffn_width = std::stoi(val);
    else if (key == "max_relative_distance") c.max_relative_distance = std::stoi(val);
    else if (key == "max_segments") c.max_segments = std::stoi(val);
    else if (key == "dropout") c.dropout = std::stof(val);
    else if (key == "pitch_vocab") c.pitch_vocab = std::stoi(val);
    else if (key == "duration_vocab") c.duration_vocab = std::stoi(val);
    else if (key == "scale_by_d_model") c.scale_by_d_model = val != "0";
    else throw DataError("checkpoint config: unknown key '" + key + "'");
  }
  return c;
}

}  // namespace

void saveCheckpoint(const Checkpoint& ckpt, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint: " + path);
  out.write(MAGIC, sizeof(MAGIC));
  putU32(out, VERSION);
  std::string record = configRecord(ckpt.config);
  putU32(out, static_cast<std::uint32_t>(record.size()));
  out.write(record.data(), static_cast<std::streamsize>(record.size()));
  putU32(out, static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const auto& [name, tensor] : ckpt.tensors) {
    putU32(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    putU32(out, static_cast<std::uint32_t>(tensor.shape.size()));
    std::size_t numel = 1;
    for (int d : tensor.shape) {
      putU32(out, static_cast<std::uint32_t>(d));
      numel *= static_cast<std::size_t>(d);
    }
    if (numel != tensor.values.size())
      throw DataError("checkpoint tensor " + name + ": shape does not match value count");
    putFloats(out, tensor.values);
  }
  if (!out) throw DataError("write failed: " + path);
}

Checkpoint loadCheckpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, MAGIC, 8) != 0)
    throw DataError("not a checkpoint file: " + path);
  std::uint32_t version = getU32(in);
  if (version != VERSION)
    throw DataError("unsupported checkpoint version " + std::to_string(version));

  Checkpoint ckpt;
  std::uint32_t record_len = getU32(in);
  std::string record(record_len, '\0');
  in.read(record.data(), record_len);
  if (!in) throw DataError("checkpoint truncated");
  ckpt.config = parseConfigRecord(record);

  std::uint32_t count = getU32(in);
  for (std::uint32_t i = 0; i < count; ++i) {
    std::uint32_t name_len = getU32(in);
    if (name_len > 4096) throw DataError("checkpoint corrupt: oversized tensor name");
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    if (!in) throw DataError("checkpoint truncated");
    std::uint32_t rank = getU32(in);
    if (rank > 8) throw DataError("checkpoint corrupt: tensor rank " + std::to_string(rank));
    CheckpointTensor tensor;
    std::size_t numel = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      tensor.shape.push_back(static_cast<int>(getU32(in)));
      if (tensor.shape.back() <= 0) throw DataError("checkpoint corrupt: bad dimension");
      numel *= static_cast<std::size_t>(tensor.shape.back());
      if (numel > (1u << 30)) throw DataError("checkpoint corrupt: tensor too large");
    }
    tensor.values.resize(numel);
    getFloats(in, tensor.values);
    ckpt.tensors.emplace(std::move(name), std::move(tensor));
  }
  return ckpt;
}

Checkpoint makeCheckpoint(const ModelConfig& cfg, const ModelState& state,
                          const std::map<std::string, CheckpointTensor>& extra) {
  Checkpoint ckpt;
  ckpt.config = cfg;
  for (const auto& [name, tensor] : state.params)
    ckpt.tensors[name] = CheckpointTensor{tensor->shape, tensor->value};
  for (const auto& [name, tensor] : extra) ckpt.tensors[name] = tensor;
  return ckpt;
}

ModelState stateFromCheckpoint(const Checkpoint& ckpt) {
  ModelState reference = ModelState::init(ckpt.config, 0);
  for (auto& [name, param] : reference.params) {
    auto it = ckpt.tensors.find(name);
    if (it == ckpt.tensors.end()) throw DataError("checkpoint missing parameter: " + name);
    if (it->second.shape != param->shape)
      throw DataError("checkpoint parameter " + name + " has shape " +
                      shapeToString(it->second.shape) + ", expected " +
                      shapeToString(param->shape));
    param->value = it->second.values;
  }
  return reference;
}

}  // namespace stt
