#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace unitax {

/// Sentinel label for unlabeled/ignored pixels. Rasters on disk encode it as
/// 255 (8-bit) or 65535 (16-bit); in memory it is always kVoidLabel.
inline constexpr std::uint16_t kVoidLabel = 65535;

/// Ordered set of mutually disjoint classes defined by one dataset.
/// Class identity is (dataset_id, index); names are display metadata and may
/// collide across datasets ("road" exists in most driving datasets).
struct Taxonomy {
  std::string dataset_id;
  std::vector<std::string> classes;
  /// Meta taxonomies (merge results) carry globally qualified class names
  /// such as "ade-car/vistas-car"; leaf taxonomies carry bare names.
  bool meta = false;

  std::size_t size() const { return classes.size(); }

  /// Display name of a class vertex: "<dataset>-<name>" for leaves, the
  /// already-qualified name for metas.
  std::string qualified_name(std::size_t index) const;
};

/// Reference to one dataset-specific class.
struct ClassRef {
  std::string dataset_id;
  std::uint32_t class_index = 0;

  auto operator<=>(const ClassRef&) const = default;
};

enum class RelationKind : std::uint8_t {
  kOverlap,  // two classes denote the same concept (mutual mcfp edges)
  kSubset,   // subject is contained in object (one-way mcfp edge)
};

/// A hypothesized cross-dataset relation backed by co-occurrence mass.
/// OVERLAP is stored once per unordered pair with subject < object in
/// canonical (dataset_id, class_index) order. SUBSET means subject < object
/// in the containment sense: subject is a part of object.
struct RelationHypothesis {
  RelationKind kind = RelationKind::kSubset;
  ClassRef subject;
  ClassRef object;
  std::uint64_t support = 0;

  bool links(const ClassRef& x, const ClassRef& y) const {
    return (subject == x && object == y) || (subject == y && object == x);
  }
  auto operator<=>(const RelationHypothesis&) const = default;
};

/// Two mutually exclusive subset hypotheses induced by an inconsistent
/// triplet subject -> middle -> other: accepting both would make two classes
/// of one dataset intersect. hypothesis_a is "triplet[0] in triplet[1]",
/// hypothesis_b is "triplet[1] in triplet[2]".
struct ConflictPair {
  RelationHypothesis hypothesis_a;
  RelationHypothesis hypothesis_b;
  std::array<ClassRef, 3> triplet;

  std::uint64_t combined_support() const {
    return hypothesis_a.support + hypothesis_b.support;
  }
};

/// One disjoint universal class: a derived display name plus the incident
/// dataset-specific classes (at most one per dataset).
struct UniversalClass {
  std::string name;
  std::vector<ClassRef> members;  // sorted canonically
};

/// Flat universal taxonomy plus, per dataset, the 1:N mapping from dataset
/// class index to the (non-empty, sorted) set of universal class indices.
struct UniversalTaxonomy {
  std::vector<UniversalClass> classes;
  std::map<std::string, std::vector<std::vector<std::uint32_t>>> mappings;

  std::size_t size() const { return classes.size(); }
};

/// Binary dataset-classes x universal-classes matrix; entry (c, u) = 1 iff
/// universal class u belongs to the mapping of dataset class c. Columns have
/// at most one nonzero (universal classes are disjoint), rows at least one.
struct PartialLabelMatrix {
  std::string dataset_id;
  std::size_t rows = 0;  // dataset classes
  std::size_t cols = 0;  // universal classes
  std::vector<std::uint8_t> values;  // row-major

  std::uint8_t at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  /// Dataset scores induced by a universal probability vector: M * p.
  std::vector<double> apply(const std::vector<double>& universal_probs) const;
};

/// Report-style validation: returns one human-readable violation per defect,
/// empty means valid.
std::vector<std::string> validate_taxonomy(const Taxonomy& t);
std::vector<std::string> validate_universal(const UniversalTaxonomy& u);

// JSON serialization. Round trips are byte-stable given canonical ordering.
std::string taxonomy_to_json(const Taxonomy& t);
Taxonomy taxonomy_from_json(const std::string& text);
Taxonomy load_taxonomy(const std::filesystem::path& path);
void save_taxonomy(const Taxonomy& t, const std::filesystem::path& path);

std::string universal_to_json(const UniversalTaxonomy& u);
UniversalTaxonomy universal_from_json(const std::string& text);
UniversalTaxonomy load_universal(const std::filesystem::path& path);
void save_universal(const UniversalTaxonomy& u, const std::filesystem::path& path);

}  // namespace unitax
