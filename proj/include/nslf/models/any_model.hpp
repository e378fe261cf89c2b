#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "nslf/models/hg_model.hpp"
#include "nslf/models/nslf_model.hpp"

namespace nslf {

enum class ModelKind : std::uint8_t { NslfSh = 0, Hg = 1 };

std::string to_string(ModelKind kind);
/// Accepts "nslf_sh" and "hg".
ModelKind parse_model_kind(const std::string& name);

/// Everything needed to construct either model type.
struct ModelSpec {
  ModelKind kind = ModelKind::NslfSh;
  HashGridConfig grid;
  int sh_degree = 3;
  int latent_channels = 3;
  int head_width = 32;
  int hyper_hidden = 16;
  int hg_width = 32;
  int hg_layers = 4;

  NslfConfig nslf_config() const;
  HgConfig hg_config() const;
};

using AnyModel = std::variant<NslfModel<float>, HgModel<float>>;

AnyModel make_model(const ModelSpec& spec, std::uint64_t seed);
ModelKind kind_of(const AnyModel& model);
ModelSpec spec_of(const AnyModel& model);
Vec3f predict(const AnyModel& model, const Vec3f& p_unit, const Vec3f& d);

/// Reusable forward scratch for either model kind.
struct AnyCache {
  NslfModel<float>::Cache nslf;
  HgModel<float>::Cache hg;
};
Vec3f predict(const AnyModel& model, const Vec3f& p_unit, const Vec3f& d, AnyCache& cache);
ConstParamBlocks<float> parameter_blocks(const AnyModel& model);

/// Checkpoint blob: "NSLF", u32 version, u8 kind, u32 config fields, u32 block count, then per block
/// a u64 element count and little-endian f32 values. All integers little-endian.
inline constexpr std::uint32_t kCheckpointVersion = 1;
void write_model(std::ostream& os, const AnyModel& model);
AnyModel read_model(std::istream& is);
void save_model(const std::string& path, const AnyModel& model);
AnyModel load_model(const std::string& path);

/// True when both models have the same kind, shape and bit-identical parameters.
bool bit_equal(const AnyModel& a, const AnyModel& b);

}  // namespace nslf
