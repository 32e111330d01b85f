#include "grid.hpp"

#include <numeric>

#include <json.hpp>

#include "errors.hpp"

namespace mum {

MaskSet identity_masks(int group_size, int tiles_per_axis) {
  if (group_size < 1 || tiles_per_axis < 1) {
    throw InvalidArgument("group_size and tiles_per_axis must be >= 1");
  }
  MaskSet m;
  m.group_size = group_size;
  m.tiles_per_axis = tiles_per_axis;
  m.cells.resize(static_cast<std::size_t>(group_size) * tiles_per_axis * tiles_per_axis);
  for (int g = 0; g < group_size; ++g)
    for (int i = 0; i < tiles_per_axis; ++i)
      for (int j = 0; j < tiles_per_axis; ++j) m.at(g, i, j) = g;
  return m;
}

MaskSet generate_masks(SplitRng& rng, int group_size, int tiles_per_axis) {
  if (group_size < 1) throw InvalidArgument("group_size must be >= 1, got " + std::to_string(group_size));
  if (tiles_per_axis < 1)
    throw InvalidArgument("tiles_per_axis must be >= 1, got " + std::to_string(tiles_per_axis));

  MaskSet m = identity_masks(group_size, tiles_per_axis);
  std::vector<int> perm(static_cast<std::size_t>(group_size));
  for (int i = 0; i < tiles_per_axis; ++i) {
    for (int j = 0; j < tiles_per_axis; ++j) {
      std::iota(perm.begin(), perm.end(), 0);
      // Fisher-Yates
      for (int k = group_size - 1; k > 0; --k) {
        const int r = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(k) + 1));
        std::swap(perm[static_cast<std::size_t>(k)], perm[static_cast<std::size_t>(r)]);
      }
      for (int g = 0; g < group_size; ++g) m.at(g, i, j) = perm[static_cast<std::size_t>(g)];
    }
  }
  return m;
}

std::vector<MaskViolation> validate_masks(const MaskSet& m) {
  std::vector<MaskViolation> out;
  if (m.group_size < 1 || m.tiles_per_axis < 1 ||
      m.cells.size() != static_cast<std::size_t>(m.group_size) * m.tiles_per_axis * m.tiles_per_axis) {
    out.push_back({0, 0, "malformed mask set: cells size does not match dimensions"});
    return out;
  }
  std::vector<int> seen(static_cast<std::size_t>(m.group_size));
  for (int i = 0; i < m.tiles_per_axis; ++i) {
    for (int j = 0; j < m.tiles_per_axis; ++j) {
      std::fill(seen.begin(), seen.end(), 0);
      bool bad = false;
      for (int g = 0; g < m.group_size; ++g) {
        const int src = m.at(g, i, j);
        if (src < 0 || src >= m.group_size) {
          out.push_back({i, j,
                         "cell (" + std::to_string(i) + ", " + std::to_string(j) + ") of grid " +
                             std::to_string(g) + " holds out-of-range source " + std::to_string(src)});
          bad = true;
          continue;
        }
        ++seen[static_cast<std::size_t>(src)];
      }
      if (bad) continue;
      for (int s = 0; s < m.group_size; ++s) {
        if (seen[static_cast<std::size_t>(s)] != 1) {
          out.push_back({i, j,
                         "cell (" + std::to_string(i) + ", " + std::to_string(j) + "): source " +
                             std::to_string(s) + " used " + std::to_string(seen[static_cast<std::size_t>(s)]) +
                             " times"});
          break;
        }
      }
    }
  }
  return out;
}

UnmixingMaskSet invert_masks(const MixingMaskSet& m) {
  const auto violations = validate_masks(m);
  if (!violations.empty()) {
    throw ValidationError("cannot invert invalid mask set: " + violations.front().reason);
  }
  UnmixingMaskSet inv = m;
  for (int g = 0; g < m.group_size; ++g)
    for (int i = 0; i < m.tiles_per_axis; ++i)
      for (int j = 0; j < m.tiles_per_axis; ++j) inv.at(m.at(g, i, j), i, j) = g;
  return inv;
}

std::string masks_to_json(const MaskSet& m) {
  nlohmann::json j;
  j["group_size"] = m.group_size;
  j["tiles_per_axis"] = m.tiles_per_axis;
  auto cells = nlohmann::json::array();
  for (int g = 0; g < m.group_size; ++g) {
    auto grid = nlohmann::json::array();
    for (int i = 0; i < m.tiles_per_axis; ++i) {
      auto row = nlohmann::json::array();
      for (int jj = 0; jj < m.tiles_per_axis; ++jj) row.push_back(m.at(g, i, jj));
      grid.push_back(std::move(row));
    }
    cells.push_back(std::move(grid));
  }
  j["cells"] = std::move(cells);
  return j.dump(2) + "\n";
}

MaskSet masks_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("mask file is not valid JSON: ") + e.what());
  }
  MaskSet m;
  try {
    m.group_size = j.at("group_size").get<int>();
    m.tiles_per_axis = j.at("tiles_per_axis").get<int>();
    const auto& cells = j.at("cells");
    if (static_cast<int>(cells.size()) != m.group_size) {
      throw ValidationError("mask file: cells has " + std::to_string(cells.size()) +
                            " grids, expected group_size=" + std::to_string(m.group_size));
    }
    m.cells.reserve(static_cast<std::size_t>(m.group_size) * m.tiles_per_axis * m.tiles_per_axis);
    for (const auto& grid : cells) {
      if (static_cast<int>(grid.size()) != m.tiles_per_axis) {
        throw ValidationError("mask file: grid row count does not match tiles_per_axis");
      }
      for (const auto& row : grid) {
        if (static_cast<int>(row.size()) != m.tiles_per_axis) {
          throw ValidationError("mask file: row length does not match tiles_per_axis");
        }
        for (const auto& v : row) m.cells.push_back(v.get<int>());
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("mask file is missing required fields: ") + e.what());
  }
  return m;
}

}  // namespace mum
