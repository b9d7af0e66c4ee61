#include "poco/layout.hpp"

#include <cctype>
#include <fstream>
#include <regex>
#include <sstream>

#include "json.hpp"
#include "poco/version.hpp"

namespace poco {

namespace {

bool is_word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

}  // namespace

ShotSpec make_shot_spec(int shot_id, int frames, int height, int width, std::string caption,
                        int num_refs) {
  ShotSpec spec;
  spec.shot_id = shot_id;
  spec.frames = frames;
  spec.height = height;
  spec.width = width;
  spec.side = parse_shot_prompt(caption, num_refs);
  spec.caption = std::move(caption);
  return spec;
}

SideInfoVec parse_shot_prompt(const std::string& caption, int num_refs) {
  if (num_refs < 1) {
    throw argument_error("parse_shot_prompt: num_refs must be positive");
  }
  static const std::regex mention(R"(@character_(\d+)\b)", std::regex::icase);

  SideInfoVec side = SideInfoVec::zeros(num_refs);
  std::vector<std::string> offenders;
  for (auto it = std::sregex_iterator(caption.begin(), caption.end(), mention);
       it != std::sregex_iterator(); ++it) {
    const std::smatch& m = *it;
    const std::size_t pos = static_cast<std::size_t>(m.position(0));
    if (pos > 0 && is_word_char(caption[pos - 1])) {
      continue;  // not delimited on the left, e.g. "cast@character_1"
    }
    long long index = -1;
    try {
      index = std::stoll(m.str(1));
    } catch (const std::out_of_range&) {
      // fall through with index = -1; reported below as out of range
    }
    if (index < 1 || index > num_refs) {
      offenders.push_back(m.str(0));
      continue;
    }
    side.bits[static_cast<std::size_t>(index - 1)] = 1;
  }
  if (!offenders.empty()) {
    std::ostringstream msg;
    msg << "parse_shot_prompt: reference index out of range [1, " << num_refs << "]:";
    for (const auto& o : offenders) msg << " \"" << o << "\"";
    throw parse_error(msg.str());
  }
  return side;
}

std::size_t SequenceLayout::ref_len() const {
  std::size_t n = 0;
  for (const auto& r : ref_ranges) n += r.size();
  return n;
}

SideInfoVec SequenceLayout::ref_side(int ref_index) const {
  return SideInfoVec::one_hot(num_refs, ref_index);
}

void SequenceLayout::validate() const {
  if (num_refs < 1 || static_cast<int>(ref_ranges.size()) != num_refs) {
    throw layout_error("layout: need one reference range per reference");
  }
  if (shot_ranges.empty()) {
    throw layout_error("layout: need at least one shot");
  }
  if (text_chunk_len < 1) {
    throw layout_error("layout: text_chunk_len must be positive");
  }
  std::size_t cursor = 0;
  for (const auto& r : ref_ranges) {
    if (r.begin != cursor || r.size() == 0) {
      throw layout_error("layout: reference ranges must be non-empty and consecutive from 0");
    }
    cursor = r.end;
  }
  for (const auto& r : shot_ranges) {
    if (r.begin != cursor || r.size() == 0) {
      throw layout_error("layout: shot ranges must be non-empty and consecutive after references");
    }
    cursor = r.end;
  }
  if (cursor != visual_len) {
    throw layout_error("layout: ranges must cover exactly [0, visual_len)");
  }
  if (shot_side.size() != shot_ranges.size()) {
    throw layout_error("layout: need one side vector per shot");
  }
  for (const auto& s : shot_side) {
    s.validate();
    if (s.size() != num_refs) {
      throw layout_error("layout: shot side vectors must have length num_refs");
    }
  }
  if (text_segments.size() != shot_ranges.size()) {
    throw layout_error("layout: need one text segment per shot");
  }
  const std::size_t chunk = static_cast<std::size_t>(text_chunk_len);
  for (std::size_t s = 0; s < text_segments.size(); ++s) {
    if (text_segments[s].begin != s * chunk || text_segments[s].size() != chunk) {
      throw layout_error("layout: text segment " + std::to_string(s) +
                         " must be [s*T, (s+1)*T)");
    }
  }
  if (text_len != text_segments.size() * chunk) {
    throw layout_error("layout: text_len must equal num_shots * text_chunk_len");
  }
}

SequenceLayout build_layout(const std::vector<int>& ref_token_counts,
                            const std::vector<ShotSpec>& shots, int text_chunk_len) {
  if (ref_token_counts.empty()) {
    throw argument_error("build_layout: need at least one reference");
  }
  if (shots.empty()) {
    throw argument_error("build_layout: need at least one shot");
  }
  if (text_chunk_len < 1) {
    throw argument_error("build_layout: text_chunk_len must be positive");
  }
  SequenceLayout layout;
  layout.num_refs = static_cast<int>(ref_token_counts.size());
  layout.text_chunk_len = text_chunk_len;

  std::size_t cursor = 0;
  for (int count : ref_token_counts) {
    if (count < 1) {
      throw argument_error("build_layout: reference token counts must be positive");
    }
    layout.ref_ranges.push_back({cursor, cursor + static_cast<std::size_t>(count)});
    cursor += static_cast<std::size_t>(count);
  }
  for (const ShotSpec& shot : shots) {
    if (shot.frames < 1 || shot.height < 1 || shot.width < 1) {
      throw argument_error("build_layout: shot " + std::to_string(shot.shot_id) +
                           " has an empty token grid");
    }
    if (shot.side.size() != layout.num_refs) {
      throw argument_error("build_layout: shot " + std::to_string(shot.shot_id) +
                           " side vector length does not match reference count");
    }
    layout.shot_ranges.push_back({cursor, cursor + static_cast<std::size_t>(shot.token_count())});
    layout.shot_side.push_back(shot.side);
    cursor += static_cast<std::size_t>(shot.token_count());
  }
  layout.visual_len = cursor;
  layout.text_len = shots.size() * static_cast<std::size_t>(text_chunk_len);
  const std::size_t chunk = static_cast<std::size_t>(text_chunk_len);
  for (std::size_t s = 0; s < shots.size(); ++s) {
    layout.text_segments.push_back({s * chunk, (s + 1) * chunk});
  }
  layout.validate();
  return layout;
}

std::vector<TokenCoord> assign_coords(const SequenceLayout& layout,
                                      const std::vector<ShotSpec>& shots,
                                      const std::vector<RefGrid>& ref_grids) {
  layout.validate();
  if (static_cast<int>(ref_grids.size()) != layout.num_refs) {
    throw argument_error("assign_coords: need one grid per reference");
  }
  if (shots.size() != layout.shot_ranges.size()) {
    throw argument_error("assign_coords: shot list does not match layout");
  }
  std::vector<TokenCoord> coords(layout.visual_len);

  for (int r = 0; r < layout.num_refs; ++r) {
    const IndexRange& range = layout.ref_ranges[static_cast<std::size_t>(r)];
    const RefGrid& grid = ref_grids[static_cast<std::size_t>(r)];
    if (grid.height < 1 || grid.width < 1 ||
        static_cast<std::size_t>(grid.token_count()) != range.size()) {
      throw argument_error("assign_coords: reference " + std::to_string(r + 1) +
                           " grid does not match its token count");
    }
    const SideInfoVec side = layout.ref_side(r + 1);
    for (std::size_t i = 0; i < range.size(); ++i) {
      TokenCoord& c = coords[range.begin + i];
      c.t = -static_cast<long long>(r + 1);
      c.h = static_cast<long long>(i) / grid.width;
      c.w = static_cast<long long>(i) % grid.width;
      c.side = side;
    }
  }

  long long frame_base = 0;
  for (std::size_t s = 0; s < shots.size(); ++s) {
    const ShotSpec& shot = shots[s];
    const IndexRange& range = layout.shot_ranges[s];
    if (static_cast<std::size_t>(shot.token_count()) != range.size()) {
      throw argument_error("assign_coords: shot " + std::to_string(shot.shot_id) +
                           " token count does not match layout");
    }
    std::size_t i = range.begin;
    for (int f = 0; f < shot.frames; ++f) {
      for (int h = 0; h < shot.height; ++h) {
        for (int w = 0; w < shot.width; ++w, ++i) {
          TokenCoord& c = coords[i];
          c.t = frame_base + f;
          c.h = h;
          c.w = w;
          c.side = layout.shot_side[s];
        }
      }
    }
    frame_base += shot.frames;
  }
  return coords;
}

LayoutManifest manifest_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw parse_error(std::string("layout manifest: invalid JSON: ") + e.what());
  }
  LayoutManifest m;
  try {
    m.num_refs = j.at("num_refs").get<int>();
    m.text_chunk_len = j.at("text_chunk_len").get<int>();
    for (const auto& ref : j.at("refs")) {
      m.ref_token_counts.push_back(ref.at("tokens").get<int>());
      m.ref_grids.push_back({ref.at("grid_h").get<int>(), ref.at("grid_w").get<int>()});
    }
    for (const auto& shot : j.at("shots")) {
      m.shots.push_back(make_shot_spec(shot.at("id").get<int>(), shot.at("frames").get<int>(),
                                       shot.at("height").get<int>(), shot.at("width").get<int>(),
                                       shot.at("caption").get<std::string>(), m.num_refs));
    }
  } catch (const nlohmann::json::exception& e) {
    throw parse_error(std::string("layout manifest: missing or mistyped field: ") + e.what());
  }
  for (std::size_t r = 0; r < m.ref_grids.size(); ++r) {
    if (m.ref_grids[r].token_count() != m.ref_token_counts[r]) {
      throw parse_error("layout manifest: reference " + std::to_string(r + 1) +
                        " token count does not match its grid");
    }
  }
  return m;
}

std::string manifest_to_json(const LayoutManifest& manifest) {
  nlohmann::ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["num_refs"] = manifest.num_refs;
  j["text_chunk_len"] = manifest.text_chunk_len;
  j["refs"] = nlohmann::ordered_json::array();
  for (std::size_t r = 0; r < manifest.ref_token_counts.size(); ++r) {
    nlohmann::ordered_json ref;
    ref["tokens"] = manifest.ref_token_counts[r];
    ref["grid_h"] = manifest.ref_grids[r].height;
    ref["grid_w"] = manifest.ref_grids[r].width;
    j["refs"].push_back(ref);
  }
  j["shots"] = nlohmann::ordered_json::array();
  for (const ShotSpec& shot : manifest.shots) {
    nlohmann::ordered_json s;
    s["id"] = shot.shot_id;
    s["frames"] = shot.frames;
    s["height"] = shot.height;
    s["width"] = shot.width;
    s["caption"] = shot.caption;
    s["side"] = shot.side.to_bit_string();
    j["shots"].push_back(s);
  }
  return j.dump(2);
}

LayoutManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw io_error("cannot open layout manifest: " + path);
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return manifest_from_json(buf.str());
}

}  // namespace poco
