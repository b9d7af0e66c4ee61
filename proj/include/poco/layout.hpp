#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "poco/errors.hpp"
#include "poco/sideinfo.hpp"

namespace poco {

/// Half-open token index range [begin, end).
struct IndexRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  bool contains(std::size_t i) const { return i >= begin && i < end; }

  friend bool operator==(const IndexRange&, const IndexRange&) = default;
};

/// One shot of a multi-shot sequence, in token-grid units.
struct ShotSpec {
  int shot_id = 1;
  int frames = 1;
  int height = 1;
  int width = 1;
  std::string caption;
  SideInfoVec side;  // derived from the caption

  int token_count() const { return frames * height * width; }

  friend bool operator==(const ShotSpec&, const ShotSpec&) = default;
};

/// Builds a ShotSpec with its side bits parsed from the caption.
ShotSpec make_shot_spec(int shot_id, int frames, int height, int width, std::string caption,
                        int num_refs);

/// Grid coordinates plus side bits of one visual token. Reference tokens sit
/// at negative t.
struct TokenCoord {
  long long t = 0;
  long long h = 0;
  long long w = 0;
  SideInfoVec side;

  friend bool operator==(const TokenCoord&, const TokenCoord&) = default;
};

struct RefGrid {
  int height = 1;
  int width = 1;

  int token_count() const { return height * width; }

  friend bool operator==(const RefGrid&, const RefGrid&) = default;
};

/// Index bookkeeping of one concatenated sequence: reference tokens first,
/// then each shot's video tokens; the text side is S fixed-length segments.
struct SequenceLayout {
  int num_refs = 0;
  int text_chunk_len = 0;
  std::vector<IndexRange> ref_ranges;
  std::vector<IndexRange> shot_ranges;
  std::vector<IndexRange> text_segments;
  std::vector<SideInfoVec> shot_side;
  std::size_t visual_len = 0;  // L_v
  std::size_t text_len = 0;    // L_t

  std::size_t ref_len() const;  // L_ref
  int num_shots() const { return static_cast<int>(shot_ranges.size()); }
  SideInfoVec ref_side(int ref_index) const;  // one-hot, ref_index 1-based

  /// Throws layout_error if ranges are unordered, overlapping or incomplete.
  void validate() const;
};

/// Extracts the side-information bits declared by a shot prompt: bit i-1 is
/// set iff the word-boundary-delimited token `@character_i` occurs (the word
/// "character" matched case-insensitively, i parsed as decimal). Duplicate
/// mentions are idempotent; mentions with i outside [1, num_refs] raise a
/// parse_error naming every offender.
SideInfoVec parse_shot_prompt(const std::string& caption, int num_refs);

/// Sequential range assignment: references in order, then shots in order;
/// text segment s is [s*T, (s+1)*T).
SequenceLayout build_layout(const std::vector<int>& ref_token_counts,
                            const std::vector<ShotSpec>& shots, int text_chunk_len);

/// Assigns (t, h, w, side) to every visual token. Shot tokens get a global
/// frame index continuous across shots and their grid position; reference r
/// sits at t = -r on its own grid with a one-hot side vector.
std::vector<TokenCoord> assign_coords(const SequenceLayout& layout,
                                      const std::vector<ShotSpec>& shots,
                                      const std::vector<RefGrid>& ref_grids);

/// What a layout manifest file carries; side bits are re-derived from the
/// captions on load.
struct LayoutManifest {
  int num_refs = 0;
  int text_chunk_len = 0;
  std::vector<int> ref_token_counts;
  std::vector<RefGrid> ref_grids;
  std::vector<ShotSpec> shots;

  friend bool operator==(const LayoutManifest&, const LayoutManifest&) = default;
};

LayoutManifest manifest_from_json(const std::string& text);
std::string manifest_to_json(const LayoutManifest& manifest);
LayoutManifest load_manifest(const std::string& path);

}  // namespace poco
