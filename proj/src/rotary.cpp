#include "poco/rotary.hpp"

#include <cmath>
#include <utility>

#include "json.hpp"
#include "poco/sideinfo.hpp"

namespace poco {

std::string axis_name(Axis axis) {
  switch (axis) {
    case Axis::T: return "t";
    case Axis::S: return "s";
    case Axis::H: return "h";
    case Axis::W: return "w";
  }
  throw argument_error("axis_name: unknown axis");
}

std::string realloc_name(Realloc realloc) {
  switch (realloc) {
    case Realloc::None: return "none";
    case Realloc::TLow: return "tlow";
    case Realloc::THigh: return "thigh";
  }
  throw argument_error("realloc_name: unknown strategy");
}

Realloc realloc_from_name(const std::string& name) {
  if (name == "none") return Realloc::None;
  if (name == "tlow") return Realloc::TLow;
  if (name == "thigh") return Realloc::THigh;
  throw parse_error("realloc must be one of \"none\", \"tlow\", \"thigh\"; got \"" + name + "\"");
}

void RotaryConfig::validate() const {
  if (head_dim <= 0 || head_dim % 2 != 0) {
    throw argument_error("RotaryConfig: head_dim must be a positive even integer");
  }
  if (!(theta > 1.0) || !std::isfinite(theta)) {
    throw argument_error("RotaryConfig: theta must be a finite real > 1");
  }
  for (auto [name, d] : {std::pair{"d_t", d_t}, {"d_h", d_h}, {"d_w", d_w}, {"d_s", d_s}}) {
    if (d < 0 || d % 2 != 0) {
      throw argument_error(std::string("RotaryConfig: ") + name + " must be an even non-negative integer");
    }
  }
  if (d_t + d_h + d_w + d_s != head_dim) {
    throw argument_error("RotaryConfig: d_t + d_h + d_w + d_s must equal head_dim");
  }
  if (num_refs < 1) {
    throw argument_error("RotaryConfig: num_refs must be positive");
  }
  if (realloc == Realloc::None) {
    if (d_s != 0) {
      throw argument_error("RotaryConfig: d_s must be 0 when realloc is none");
    }
  } else if (d_s != 2 * num_refs) {
    throw argument_error("RotaryConfig: d_s must equal 2*num_refs when realloc is tlow/thigh");
  }
}

RotaryConfig RotaryConfig::without_sideinfo() const {
  RotaryConfig cfg = *this;
  cfg.d_t += cfg.d_s;
  cfg.d_s = 0;
  cfg.realloc = Realloc::None;
  return cfg;
}

RotaryConfig rotary_config_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw parse_error(std::string("rotary config: invalid JSON: ") + e.what());
  }
  RotaryConfig cfg;
  try {
    cfg.head_dim = j.at("head_dim").get<int>();
    cfg.theta = j.at("theta").get<double>();
    cfg.d_t = j.at("d_t").get<int>();
    cfg.d_h = j.at("d_h").get<int>();
    cfg.d_w = j.at("d_w").get<int>();
    cfg.d_s = j.at("d_s").get<int>();
    cfg.num_refs = j.at("num_refs").get<int>();
    cfg.realloc = realloc_from_name(j.at("realloc").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw parse_error(std::string("rotary config: missing or mistyped field: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

std::string rotary_config_to_json(const RotaryConfig& cfg) {
  nlohmann::ordered_json j;
  j["head_dim"] = cfg.head_dim;
  j["theta"] = cfg.theta;
  j["d_t"] = cfg.d_t;
  j["d_h"] = cfg.d_h;
  j["d_w"] = cfg.d_w;
  j["d_s"] = cfg.d_s;
  j["num_refs"] = cfg.num_refs;
  j["realloc"] = realloc_name(cfg.realloc);
  return j.dump(2);
}

Rot2 rotation_block(double angle) {
  if (!std::isfinite(angle)) {
    throw argument_error("rotation_block: angle must be finite");
  }
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return Rot2{c, -s, s, c};
}

double plane_frequency(int index, int head_dim, double theta) {
  if (head_dim <= 0 || head_dim % 2 != 0) {
    throw argument_error("plane_frequency: head_dim must be a positive even integer");
  }
  if (index < 1 || index > head_dim / 2) {
    throw argument_error("plane_frequency: index out of range [1, head_dim/2]");
  }
  if (!(theta > 1.0)) {
    throw argument_error("plane_frequency: theta must be > 1");
  }
  return std::pow(theta, -2.0 * index / head_dim);
}

PlaneSchedule build_plane_schedule(const RotaryConfig& cfg) {
  cfg.validate();
  PlaneSchedule schedule;
  schedule.config = cfg;
  schedule.planes.reserve(static_cast<std::size_t>(cfg.planes()));
  schedule.provenance.reserve(static_cast<std::size_t>(cfg.planes()));

  const int t_planes = cfg.d_t / 2;
  const int s_planes = cfg.d_s / 2;  // equals num_refs unless 0
  const int h_planes = cfg.d_h / 2;
  const int w_planes = cfg.d_w / 2;

  int g = 1;
  for (int i = 1; i <= t_planes; ++i, ++g) {
    schedule.planes.push_back({Axis::T, g, plane_frequency(g, cfg.head_dim, cfg.theta), 0});
    // Surviving temporal planes: THigh donated the lowest original indices.
    const int original = cfg.realloc == Realloc::THigh ? s_planes + i : i;
    schedule.provenance.push_back({Axis::T, original});
  }
  for (int j = 1; j <= s_planes; ++j, ++g) {
    schedule.planes.push_back({Axis::S, g, ref_phase(j, cfg.num_refs), j});
    const int original = cfg.realloc == Realloc::TLow ? t_planes + j : j;
    schedule.provenance.push_back({Axis::T, original});
  }
  for (int i = 1; i <= h_planes; ++i, ++g) {
    schedule.planes.push_back({Axis::H, g, plane_frequency(g, cfg.head_dim, cfg.theta), 0});
    schedule.provenance.push_back({Axis::H, g});
  }
  for (int i = 1; i <= w_planes; ++i, ++g) {
    schedule.planes.push_back({Axis::W, g, plane_frequency(g, cfg.head_dim, cfg.theta), 0});
    schedule.provenance.push_back({Axis::W, g});
  }
  return schedule;
}

std::vector<double> plane_angles(const PlaneSchedule& schedule, long long t, long long h,
                                 long long w, std::span<const int> side_bits) {
  const RotaryConfig& cfg = schedule.config;
  if (static_cast<int>(side_bits.size()) != cfg.num_refs) {
    throw argument_error("plane_angles: side bits length must equal num_refs");
  }
  std::vector<double> angles(schedule.planes.size());
  for (std::size_t i = 0; i < schedule.planes.size(); ++i) {
    const PlaneDescriptor& p = schedule.planes[i];
    switch (p.axis) {
      case Axis::T: angles[i] = p.coefficient * static_cast<double>(t); break;
      case Axis::S: angles[i] = p.coefficient * side_bits[static_cast<std::size_t>(p.ref_index - 1)]; break;
      case Axis::H: angles[i] = p.coefficient * static_cast<double>(h); break;
      case Axis::W: angles[i] = p.coefficient * static_cast<double>(w); break;
    }
  }
  return angles;
}

void apply_rotation_inplace(std::span<double> vec, std::span<const double> angles) {
  if (vec.size() != 2 * angles.size()) {
    throw argument_error("apply_rotation: vector length must be twice the angle count");
  }
  for (std::size_t i = 0; i < angles.size(); ++i) {
    const double c = std::cos(angles[i]);
    const double s = std::sin(angles[i]);
    const double x = vec[2 * i];
    const double y = vec[2 * i + 1];
    vec[2 * i] = c * x - s * y;
    vec[2 * i + 1] = s * x + c * y;
  }
}

std::vector<double> apply_rotation(std::span<const double> vec, std::span<const double> angles) {
  std::vector<double> out(vec.begin(), vec.end());
  apply_rotation_inplace(out, angles);
  return out;
}

std::vector<float> apply_rotation(std::span<const float> vec, std::span<const float> angles) {
  if (vec.size() != 2 * angles.size()) {
    throw argument_error("apply_rotation: vector length must be twice the angle count");
  }
  std::vector<float> out(vec.begin(), vec.end());
  for (std::size_t i = 0; i < angles.size(); ++i) {
    const float c = std::cos(angles[i]);
    const float s = std::sin(angles[i]);
    const float x = out[2 * i];
    const float y = out[2 * i + 1];
    out[2 * i] = c * x - s * y;
    out[2 * i + 1] = s * x + c * y;
  }
  return out;
}

double relative_score_oracle(std::span<const double> q, std::span<const double> k,
                             const AxisOffsets& delta, const RotaryConfig& cfg) {
  cfg.validate();
  const std::size_t dim = static_cast<std::size_t>(cfg.head_dim);
  if (q.size() != dim || k.size() != dim) {
    throw argument_error("relative_score_oracle: q and k must have length head_dim");
  }
  if (static_cast<int>(delta.s.size()) != cfg.num_refs) {
    throw argument_error("relative_score_oracle: side offsets must have length num_refs");
  }
  for (int d : delta.s) {
    if (d < -1 || d > 1) {
      throw argument_error("relative_score_oracle: side offsets must lie in {-1, 0, 1}");
    }
  }

  const PlaneSchedule schedule = build_plane_schedule(cfg);

  // Full DxD relative rotation, assembled block by block.
  std::vector<double> rot(dim * dim, 0.0);
  for (std::size_t i = 0; i < schedule.planes.size(); ++i) {
    const PlaneDescriptor& p = schedule.planes[i];
    double offset = 0.0;
    switch (p.axis) {
      case Axis::T: offset = static_cast<double>(delta.t); break;
      case Axis::S: offset = delta.s[static_cast<std::size_t>(p.ref_index - 1)]; break;
      case Axis::H: offset = static_cast<double>(delta.h); break;
      case Axis::W: offset = static_cast<double>(delta.w); break;
    }
    const Rot2 block = rotation_block(p.coefficient * offset);
    const std::size_t r = 2 * i;
    rot[r * dim + r] = block.m00;
    rot[r * dim + r + 1] = block.m01;
    rot[(r + 1) * dim + r] = block.m10;
    rot[(r + 1) * dim + r + 1] = block.m11;
  }

  double score = 0.0;
  for (std::size_t r = 0; r < dim; ++r) {
    double rk = 0.0;
    for (std::size_t c = 0; c < dim; ++c) {
      rk += rot[r * dim + c] * k[c];
    }
    score += q[r] * rk;
  }
  return score;
}

}  // namespace poco
