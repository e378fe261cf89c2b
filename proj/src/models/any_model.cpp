#include "nslf/models/any_model.hpp"

#include <cstring>
#include <fstream>

#include "nslf/core/binary_io.hpp"
#include "nslf/core/errors.hpp"

namespace nslf {

std::string to_string(ModelKind kind) { return kind == ModelKind::NslfSh ? "nslf_sh" : "hg"; }

ModelKind parse_model_kind(const std::string& name) {
  if (name == "nslf_sh" || name == "nslf" || name == "sh") return ModelKind::NslfSh;
  if (name == "hg") return ModelKind::Hg;
  throw DomainError("unknown model kind '" + name + "' (expected nslf_sh or hg)");
}

NslfConfig ModelSpec::nslf_config() const {
  NslfConfig c;
  c.grid = grid;
  c.sh_degree = sh_degree;
  c.latent_channels = latent_channels;
  c.head_width = head_width;
  c.hyper_hidden = hyper_hidden;
  return c;
}

HgConfig ModelSpec::hg_config() const {
  HgConfig c;
  c.grid = grid;
  c.sh_degree = sh_degree;
  c.width = hg_width;
  c.layers = hg_layers;
  return c;
}

AnyModel make_model(const ModelSpec& spec, std::uint64_t seed) {
  if (spec.kind == ModelKind::NslfSh) return NslfModel<float>(spec.nslf_config(), seed);
  return HgModel<float>(spec.hg_config(), seed);
}

ModelKind kind_of(const AnyModel& model) {
  return std::holds_alternative<NslfModel<float>>(model) ? ModelKind::NslfSh : ModelKind::Hg;
}

ModelSpec spec_of(const AnyModel& model) {
  ModelSpec s;
  if (const auto* m = std::get_if<NslfModel<float>>(&model)) {
    const auto& c = m->config();
    s.kind = ModelKind::NslfSh;
    s.grid = c.grid;
    s.sh_degree = c.sh_degree;
    s.latent_channels = c.latent_channels;
    s.head_width = c.head_width;
    s.hyper_hidden = c.hyper_hidden;
  } else {
    const auto& c = std::get<HgModel<float>>(model).config();
    s.kind = ModelKind::Hg;
    s.grid = c.grid;
    s.sh_degree = c.sh_degree;
    s.hg_width = c.width;
    s.hg_layers = c.layers;
  }
  return s;
}

Vec3f predict(const AnyModel& model, const Vec3f& p_unit, const Vec3f& d) {
  return std::visit([&](const auto& m) { return m.predict(p_unit, d); }, model);
}

Vec3f predict(const AnyModel& model, const Vec3f& p_unit, const Vec3f& d, AnyCache& cache) {
  if (const auto* m = std::get_if<NslfModel<float>>(&model)) return m->forward(p_unit, d, cache.nslf);
  return std::get<HgModel<float>>(model).forward(p_unit, d, cache.hg);
}

ConstParamBlocks<float> parameter_blocks(const AnyModel& model) {
  return std::visit([](const auto& m) { return m.parameter_blocks(); }, model);
}

namespace {

constexpr char kMagic[4] = {'N', 'S', 'L', 'F'};

void write_grid(std::ostream& os, const HashGridConfig& g, int sh_degree) {
  binio::write<std::uint32_t>(os, g.levels);
  binio::write<std::uint32_t>(os, g.features);
  binio::write<std::uint32_t>(os, g.log2_table_size);
  binio::write<std::uint32_t>(os, g.base_resolution);
  binio::write<std::uint32_t>(os, g.max_resolution);
  binio::write<std::uint32_t>(os, sh_degree);
}

}  // namespace

void write_model(std::ostream& os, const AnyModel& model) {
  const ModelSpec s = spec_of(model);
  os.write(kMagic, 4);
  binio::write<std::uint32_t>(os, kCheckpointVersion);
  binio::write<std::uint8_t>(os, static_cast<std::uint8_t>(s.kind));
  write_grid(os, s.grid, s.sh_degree);
  if (s.kind == ModelKind::NslfSh) {
    binio::write<std::uint32_t>(os, s.latent_channels);
    binio::write<std::uint32_t>(os, s.head_width);
    binio::write<std::uint32_t>(os, s.hyper_hidden);
  } else {
    binio::write<std::uint32_t>(os, s.hg_width);
    binio::write<std::uint32_t>(os, s.hg_layers);
  }
  const auto blocks = parameter_blocks(model);
  binio::write<std::uint32_t>(os, static_cast<std::uint32_t>(blocks.size()));
  for (const auto& b : blocks) {
    binio::write<std::uint64_t>(os, b.size());
    binio::write_f32_array(os, b);
  }
  if (!os) throw DataError("checkpoint: write failed");
}

AnyModel read_model(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) throw DataError("checkpoint: bad magic");
  const auto version = binio::read<std::uint32_t>(is);
  if (version != kCheckpointVersion)
    throw DataError("checkpoint: unsupported version " + std::to_string(version));
  const auto kind = binio::read<std::uint8_t>(is);
  if (kind > 1) throw DataError("checkpoint: unknown model kind " + std::to_string(kind));
  ModelSpec s;
  s.kind = static_cast<ModelKind>(kind);
  s.grid.levels = static_cast<int>(binio::read<std::uint32_t>(is));
  s.grid.features = static_cast<int>(binio::read<std::uint32_t>(is));
  s.grid.log2_table_size = static_cast<int>(binio::read<std::uint32_t>(is));
  s.grid.base_resolution = static_cast<int>(binio::read<std::uint32_t>(is));
  s.grid.max_resolution = static_cast<int>(binio::read<std::uint32_t>(is));
  s.sh_degree = static_cast<int>(binio::read<std::uint32_t>(is));
  if (s.kind == ModelKind::NslfSh) {
    s.latent_channels = static_cast<int>(binio::read<std::uint32_t>(is));
    s.head_width = static_cast<int>(binio::read<std::uint32_t>(is));
    s.hyper_hidden = static_cast<int>(binio::read<std::uint32_t>(is));
  } else {
    s.hg_width = static_cast<int>(binio::read<std::uint32_t>(is));
    s.hg_layers = static_cast<int>(binio::read<std::uint32_t>(is));
  }
  AnyModel model = s.kind == ModelKind::NslfSh ? AnyModel(NslfModel<float>(s.nslf_config()))
                                               : AnyModel(HgModel<float>(s.hg_config()));
  auto blocks = std::visit([](auto& m) { return m.parameter_blocks(); }, model);
  const auto count = binio::read<std::uint32_t>(is);
  if (count != blocks.size()) throw DataError("checkpoint: parameter block count does not match config");
  for (auto& b : blocks) {
    const auto n = binio::read<std::uint64_t>(is);
    if (n != b.size()) throw DataError("checkpoint: parameter block size does not match config");
    binio::read_f32_array(is, b);
  }
  return model;
}

void save_model(const std::string& path, const AnyModel& model) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open " + path + " for writing");
  write_model(os, model);
}

AnyModel load_model(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open checkpoint " + path);
  return read_model(is);
}

bool bit_equal(const AnyModel& a, const AnyModel& b) {
  if (a.index() != b.index()) return false;
  const auto pa = parameter_blocks(a);
  const auto pb = parameter_blocks(b);
  if (pa.size() != pb.size()) return false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    if (pa[i].size() != pb[i].size()) return false;
    if (std::memcmp(pa[i].data(), pb[i].data(), pa[i].size() * sizeof(float)) != 0) return false;
  }
  return true;
}

}  // namespace nslf
