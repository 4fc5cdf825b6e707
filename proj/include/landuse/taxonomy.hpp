#ifndef LANDUSE_TAXONOMY_HPP
#define LANDUSE_TAXONOMY_HPP

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace landuse {

/// Index of a class within one taxonomy level (0-based, enumeration order).
using ClassIndex = int;

enum class Level { Fine = 0, Middle = 1, Top = 2 };

/// "fine", "middle" or "top".
std::string_view to_string(Level level);
/// Accepts "fine"/"middle"/"top" (also 45/16/5). Throws ConfigError otherwise.
Level parse_level(std::string_view text);
/// True when `a` is at least as coarse as `b`.
constexpr bool is_coarser_or_equal(Level a, Level b) { return static_cast<int>(a) >= static_cast<int>(b); }

/**
 * Three-level land-use class hierarchy (top / middle / fine) with total parent
 * maps between consecutive levels. Immutable once constructed.
 *
 * Names are matched case-sensitively and exactly; indices are the position in
 * enumeration order within each level.
 */
class Taxonomy {
 public:
  /// Validates uniqueness of names per level and totality of both parent maps.
  Taxonomy(std::vector<std::string> top, std::vector<std::string> middle,
           std::vector<std::string> fine, std::vector<ClassIndex> middle_to_top,
           std::vector<ClassIndex> fine_to_middle);

  std::size_t size(Level level) const { return names_[idx(level)].size(); }
  const std::vector<std::string>& names(Level level) const { return names_[idx(level)]; }
  const std::string& name(Level level, ClassIndex i) const;
  std::optional<ClassIndex> find(Level level, std::string_view name) const;
  /// Like find() but throws DomainError naming the unknown class.
  ClassIndex index(Level level, std::string_view name) const;

  const std::vector<ClassIndex>& fine_to_middle() const { return fine_to_middle_; }
  const std::vector<ClassIndex>& middle_to_top() const { return middle_to_top_; }

  /// Ancestor of a fine class at `target`; identity for Level::Fine.
  ClassIndex roll_up(ClassIndex fine_index, Level target) const;
  /// Ancestor of a class given at level `from`; `target` must not be finer.
  ClassIndex roll_up(ClassIndex index, Level from, Level target) const;
  /// Element-wise roll_up of fine labels.
  std::vector<ClassIndex> relabel(std::span<const ClassIndex> fine_labels, Level target) const;

  /// Indented text form: depth 0/1/2 (two spaces per level) is top/middle/fine.
  std::string to_text() const;
  /// Inverse of to_text(). Blank lines and lines starting with '#' are skipped;
  /// a tab also counts as one level of indentation.
  static Taxonomy from_text(std::string_view text);

  bool operator==(const Taxonomy& other) const;

 private:
  static constexpr std::size_t idx(Level l) { return static_cast<std::size_t>(l); }
  void check(Level level, ClassIndex i) const;

  std::array<std::vector<std::string>, 3> names_;
  std::array<std::unordered_map<std::string, ClassIndex>, 3> lookup_;
  std::vector<ClassIndex> middle_to_top_;
  std::vector<ClassIndex> fine_to_middle_;
};

/// The built-in 45/16/5 land-use hierarchy derived from the LBCS Function dimension.
const Taxonomy& builtin_taxonomy();

}  // namespace landuse

#endif  // LANDUSE_TAXONOMY_HPP
