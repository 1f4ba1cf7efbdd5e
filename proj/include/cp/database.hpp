#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "cp/asymptote.hpp"
#include "cp/dielectric.hpp"
#include "cp/molecule.hpp"

namespace cp {

using json = nlohmann::ordered_json;

PermittivityModel material_from_json(const json& j);
json material_to_json(const PermittivityModel& m);
Molecule molecule_from_json(const json& j);
json molecule_to_json(const Molecule& m);

// CP_DATA_DIR if set, otherwise the repository data directory.
std::filesystem::path data_dir();
std::vector<std::string> list_materials(const std::filesystem::path& dir = data_dir());
std::vector<std::string> list_molecules(const std::filesystem::path& dir = data_dir());
PermittivityModel load_material(const std::string& id, const std::filesystem::path& dir = data_dir());
Molecule load_molecule(const std::string& id, const std::filesystem::path& dir = data_dir());

json coeffs_to_json(const CoeffSet& c);

struct CoeffRow {
  std::string molecule;
  std::string surface;
  CoeffSet coeffs;
};
std::string coeff_table(const std::vector<CoeffRow>& rows);

std::string format_sci(double v, int digits = 12);

}  // namespace cp
