#include "unitax/taxonomy.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include <nlohmann/json.hpp>

namespace unitax {

using nlohmann::json;

std::string Taxonomy::qualified_name(std::size_t index) const {
  if (index >= classes.size())
    throw std::out_of_range("qualified_name: class index out of range");
  if (meta) return classes[index];
  return dataset_id + "-" + classes[index];
}

std::vector<double> PartialLabelMatrix::apply(const std::vector<double>& universal_probs) const {
  if (universal_probs.size() != cols)
    throw std::invalid_argument("PartialLabelMatrix::apply: vector length mismatch");
  std::vector<double> out(rows, 0.0);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c)
      if (values[r * cols + c]) out[r] += universal_probs[c];
  return out;
}

std::vector<std::string> validate_taxonomy(const Taxonomy& t) {
  std::vector<std::string> violations;
  if (t.classes.empty()) violations.push_back("empty class list");
  if (t.dataset_id.empty()) violations.push_back("empty dataset_id");
  if (t.classes.size() >= kVoidLabel)
    violations.push_back("class count collides with void label range");
  std::unordered_set<std::string> seen;
  for (const auto& name : t.classes) {
    if (!seen.insert(name).second)
      violations.push_back("duplicate name: " + name);
  }
  return violations;
}

namespace {

std::string ref_str(const ClassRef& r) {
  return r.dataset_id + "[" + std::to_string(r.class_index) + "]";
}

}  // namespace

std::vector<std::string> validate_universal(const UniversalTaxonomy& u) {
  std::vector<std::string> violations;

  std::unordered_set<std::string> names;
  for (const auto& uc : u.classes) {
    if (!names.insert(uc.name).second)
      violations.push_back("duplicate universal name: " + uc.name);
  }

  // Members: at most one per dataset, and each member's dataset must map
  // this universal class from exactly that member class.
  for (std::size_t ui = 0; ui < u.classes.size(); ++ui) {
    const auto& uc = u.classes[ui];
    std::unordered_set<std::string> datasets;
    for (const auto& m : uc.members) {
      if (!datasets.insert(m.dataset_id).second)
        violations.push_back("intra-dataset member pair in " + uc.name + ": " + ref_str(m));
      auto it = u.mappings.find(m.dataset_id);
      if (it == u.mappings.end()) {
        violations.push_back("member dataset without mapping: " + m.dataset_id);
        continue;
      }
      const auto& mapping = it->second;
      if (m.class_index >= mapping.size()) {
        violations.push_back("member class out of mapping range: " + ref_str(m));
        continue;
      }
      const auto& targets = mapping[m.class_index];
      if (std::find(targets.begin(), targets.end(), static_cast<std::uint32_t>(ui)) ==
          targets.end())
        violations.push_back("universal class " + uc.name +
                             " missing from mapping image of member " + ref_str(m));
    }
  }

  for (const auto& [dataset, mapping] : u.mappings) {
    std::unordered_set<std::uint32_t> used;
    for (std::size_t c = 0; c < mapping.size(); ++c) {
      const auto& targets = mapping[c];
      if (targets.empty())
        violations.push_back("unmapped dataset class: " + dataset + "[" + std::to_string(c) + "]");
      for (auto ui : targets) {
        if (ui >= u.classes.size()) {
          violations.push_back("mapping target out of range: " + dataset + "[" +
                               std::to_string(c) + "] -> " + std::to_string(ui));
          continue;
        }
        if (!used.insert(ui).second)
          violations.push_back("non-disjoint mapping: " + dataset + " classes share universal " +
                               u.classes[ui].name);
      }
    }
  }
  return violations;
}

namespace {

json taxonomy_json(const Taxonomy& t) {
  json j;
  j["dataset_id"] = t.dataset_id;
  j["classes"] = t.classes;
  if (t.meta) j["meta"] = true;
  return j;
}

Taxonomy taxonomy_from(const json& j) {
  Taxonomy t;
  t.dataset_id = j.at("dataset_id").get<std::string>();
  t.classes = j.at("classes").get<std::vector<std::string>>();
  t.meta = j.value("meta", false);
  return t;
}

}  // namespace

std::string taxonomy_to_json(const Taxonomy& t) { return taxonomy_json(t).dump(2) + "\n"; }

Taxonomy taxonomy_from_json(const std::string& text) {
  return taxonomy_from(json::parse(text));
}

Taxonomy load_taxonomy(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_taxonomy: cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return taxonomy_from_json(ss.str());
  } catch (const json::exception& e) {
    throw std::runtime_error("load_taxonomy: " + path.string() + ": " + e.what());
  }
}

void save_taxonomy(const Taxonomy& t, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_taxonomy: cannot open " + path.string());
  out << taxonomy_to_json(t);
}

std::string universal_to_json(const UniversalTaxonomy& u) {
  json j;
  j["universal_classes"] = json::array();
  for (const auto& uc : u.classes) {
    json members = json::array();
    for (const auto& m : uc.members)
      members.push_back({{"dataset", m.dataset_id}, {"class", m.class_index}});
    j["universal_classes"].push_back({{"name", uc.name}, {"members", members}});
  }
  json mappings = json::object();
  for (const auto& [dataset, mapping] : u.mappings) mappings[dataset] = mapping;
  j["mappings"] = mappings;
  return j.dump(2) + "\n";
}

UniversalTaxonomy universal_from_json(const std::string& text) {
  const json j = json::parse(text);
  UniversalTaxonomy u;
  for (const auto& jc : j.at("universal_classes")) {
    UniversalClass uc;
    uc.name = jc.at("name").get<std::string>();
    for (const auto& jm : jc.at("members"))
      uc.members.push_back(
          {jm.at("dataset").get<std::string>(), jm.at("class").get<std::uint32_t>()});
    u.classes.push_back(std::move(uc));
  }
  for (const auto& [dataset, mapping] : j.at("mappings").items())
    u.mappings[dataset] = mapping.get<std::vector<std::vector<std::uint32_t>>>();
  return u;
}

UniversalTaxonomy load_universal(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_universal: cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return universal_from_json(ss.str());
  } catch (const json::exception& e) {
    throw std::runtime_error("load_universal: " + path.string() + ": " + e.what());
  }
}

void save_universal(const UniversalTaxonomy& u, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_universal: cannot open " + path.string());
  out << universal_to_json(u);
}

}  // namespace unitax
