#include "rpmixer/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <map>

#include "binary_io.hpp"

namespace rpmixer {

namespace {

constexpr char kMagic[4] = {'R', 'P', 'C', 'K'};
constexpr const char* kContext = "checkpoint";
using detail::get_le;
using detail::put_le;

void write_block(std::ostream& os, const NamedTensor& block) {
  put_le<std::uint16_t>(os, static_cast<std::uint16_t>(block.name.size()));
  os.write(block.name.data(), static_cast<std::streamsize>(block.name.size()));
  put_le<std::uint8_t>(os, static_cast<std::uint8_t>(block.value.rank()));
  for (std::size_t d : block.value.shape()) put_le<std::uint32_t>(os, static_cast<std::uint32_t>(d));
  for (float v : block.value.data()) put_le<float>(os, v);
}

NamedTensor read_block(std::istream& is) {
  NamedTensor block;
  const auto len = get_le<std::uint16_t>(is, kContext, "block name length");
  block.name.resize(len);
  if (!is.read(block.name.data(), len)) throw DataError("checkpoint: truncated block name");
  const auto rank = get_le<std::uint8_t>(is, kContext, "block rank");
  Shape shape(rank);
  for (auto& d : shape) d = get_le<std::uint32_t>(is, kContext, "block shape");
  block.value = Tensor(shape);
  for (float& v : block.value.data()) v = get_le<float>(is, kContext, block.name.c_str());
  return block;
}

void write_blocks(std::ostream& os, const std::vector<NamedTensor>& blocks) {
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(blocks.size()));
  for (const auto& b : blocks) write_block(os, b);
}

std::vector<NamedTensor> read_blocks(std::istream& is) {
  const auto count = get_le<std::uint32_t>(is, kContext, "block count");
  std::vector<NamedTensor> out;
  out.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) out.push_back(read_block(is));
  return out;
}

}  // namespace

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("checkpoint: cannot write " + path.string());
  out.write(kMagic, 4);
  put_le<std::uint16_t>(out, Checkpoint::kVersion);
  const std::string text = serialize_config(checkpoint.config);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(text.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  write_blocks(out, checkpoint.tensors);
  put_le<std::uint8_t>(out, checkpoint.optimizer ? 1 : 0);
  if (checkpoint.optimizer) {
    put_le<std::uint64_t>(out, checkpoint.optimizer->step);
    write_blocks(out, checkpoint.optimizer->first_moments);
    write_blocks(out, checkpoint.optimizer->second_moments);
  }
  put_le<double>(out, checkpoint.best_val_mae);
  if (!out) throw DataError("checkpoint: write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("checkpoint: cannot open " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw DataError("checkpoint: " + path.string() + " does not start with RPCK");
  }
  const auto version = get_le<std::uint16_t>(in, kContext, "version");
  if (version != Checkpoint::kVersion) {
    throw DataError("checkpoint: unsupported version " + std::to_string(version));
  }
  Checkpoint cp;
  const auto text_len = get_le<std::uint32_t>(in, kContext, "config length");
  std::string text(text_len, '\0');
  if (!in.read(text.data(), text_len)) throw DataError("checkpoint: truncated config text");
  cp.config = parse_config(text);
  cp.tensors = read_blocks(in);
  if (get_le<std::uint8_t>(in, kContext, "optimizer flag") != 0) {
    OptimizerState state;
    state.step = get_le<std::uint64_t>(in, kContext, "optimizer step");
    state.first_moments = read_blocks(in);
    state.second_moments = read_blocks(in);
    cp.optimizer = std::move(state);
  }
  cp.best_val_mae = get_le<double>(in, kContext, "best validation MAE");
  if (in.peek() != std::char_traits<char>::eof()) {
    throw DataError("checkpoint: trailing bytes after " + path.string());
  }
  return cp;
}

Checkpoint make_checkpoint(const ExperimentConfig& config, RPMixerModel<float>& model,
                           const Standardizer& scaler, const AdamW<float>* optimizer,
                           double best_val_mae) {
  Checkpoint cp;
  cp.config = config;
  cp.config.nodes = model.config().nodes;
  cp.config.features = model.config().features;
  for (const auto& ref : model.state()) cp.tensors.push_back({ref.name, *ref.value});
  cp.tensors.push_back({"scaler.mean", scaler.mean()});
  cp.tensors.push_back({"scaler.std", scaler.std()});
  if (optimizer && optimizer->step_count() > 0) {
    const auto params = model.parameters();
    OptimizerState state;
    state.step = optimizer->step_count();
    for (std::size_t i = 0; i < optimizer->first_moments().size(); ++i) {
      state.first_moments.push_back({params[i].name, optimizer->first_moments()[i]});
      state.second_moments.push_back({params[i].name, optimizer->second_moments()[i]});
    }
    cp.optimizer = std::move(state);
  }
  cp.best_val_mae = best_val_mae;
  return cp;
}

RestoredRun restore_run(const Checkpoint& checkpoint) {
  std::map<std::string, const Tensor*> by_name;
  for (const auto& t : checkpoint.tensors) {
    if (!by_name.emplace(t.name, &t.value).second) {
      throw DataError("checkpoint: duplicate tensor '" + t.name + "'");
    }
  }
  auto take = [&](const std::string& name, const Shape& expected) -> const Tensor& {
    const auto it = by_name.find(name);
    if (it == by_name.end()) throw DataError("checkpoint: missing tensor '" + name + "'");
    if (it->second->shape() != expected) {
      throw DataError("checkpoint: tensor '" + name + "' has shape " +
                      shape_string(it->second->shape()) + ", expected " + shape_string(expected));
    }
    const Tensor& t = *it->second;
    by_name.erase(it);
    return t;
  };

  RestoredRun run{checkpoint.config, RPMixerModel<float>(checkpoint.config.model_config()), {},
                  checkpoint.best_val_mae};
  for (const auto& ref : run.model.state()) *ref.value = take(ref.name, ref.value->shape());
  const Shape scaler_shape{checkpoint.config.nodes, checkpoint.config.features};
  const Tensor& mean = take("scaler.mean", scaler_shape);
  const Tensor& std = take("scaler.std", scaler_shape);
  run.scaler = Standardizer(mean, std);
  if (!by_name.empty()) {
    throw DataError("checkpoint: unexpected tensor '" + by_name.begin()->first + "'");
  }
  return run;
}

}  // namespace rpmixer
