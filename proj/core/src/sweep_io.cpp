#include "iontherm/sweep_io.hpp"

#include <json.hpp>

namespace iontherm {

namespace {

using nlohmann::json;

json vector_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Eigen::VectorXd vector_from_json(const json& j) {
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

}  // namespace

std::string sweep_to_json(const FockSweepLibrary& lib) {
  json j;
  j["config"] = {
      {"omega_rad_s", lib.config.omega},
      {"nu_rad_s", lib.config.nu},
      {"delta_laser_rad_s", vector_to_json(lib.config.delta_laser)},
      {"delta_zeeman_rad_s", vector_to_json(lib.config.delta_zeeman)},
      {"eta", vector_to_json(lib.config.eta)},
      {"n_ions", lib.config.n_ions},
      {"n_max", lib.config.fock.n_max},
  };
  j["times_us"] = lib.times_us;
  json p = json::array();
  for (const auto& pn : lib.p) {
    json ions = json::array();
    for (Eigen::Index i = 0; i < pn.rows(); ++i) {
      json row = json::array();
      for (Eigen::Index t = 0; t < pn.cols(); ++t) row.push_back(pn(i, t));
      ions.push_back(std::move(row));
    }
    p.push_back(std::move(ions));
  }
  j["p"] = std::move(p);
  return j.dump();
}

FockSweepLibrary sweep_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw sweep_format_error(std::string("sweep library: invalid JSON: ") + e.what());
  }
  try {
    FockSweepLibrary lib;
    const json& c = j.at("config");
    lib.config.omega = c.at("omega_rad_s").get<double>();
    lib.config.nu = c.at("nu_rad_s").get<double>();
    lib.config.delta_laser = vector_from_json(c.at("delta_laser_rad_s"));
    lib.config.delta_zeeman = vector_from_json(c.at("delta_zeeman_rad_s"));
    lib.config.eta = vector_from_json(c.at("eta"));
    lib.config.n_ions = c.at("n_ions").get<int>();
    lib.config.fock.n_max = c.at("n_max").get<int>();
    lib.config.validate();

    lib.times_us = j.at("times_us").get<std::vector<double>>();
    if (lib.times_us.empty())
      throw sweep_format_error("sweep library: empty time grid");
    for (std::size_t t = 1; t < lib.times_us.size(); ++t)
      if (!(lib.times_us[t] > lib.times_us[t - 1]))
        throw sweep_format_error("sweep library: times must be ascending");

    const json& p = j.at("p");
    if (p.empty()) throw sweep_format_error("sweep library: no traces");
    lib.p.reserve(p.size());
    for (const json& ions : p) {
      if (static_cast<int>(ions.size()) != lib.config.n_ions)
        throw sweep_format_error("sweep library: ion count mismatch in p");
      Eigen::MatrixXd pn(lib.config.n_ions, lib.times_us.size());
      for (std::size_t i = 0; i < ions.size(); ++i) {
        const json& row = ions[i];
        if (row.size() != lib.times_us.size())
          throw sweep_format_error("sweep library: time count mismatch in p");
        for (std::size_t t = 0; t < row.size(); ++t) {
          const double v = row[t].get<double>();
          if (!(v >= 0.0 && v <= 1.0))
            throw sweep_format_error("sweep library: population outside [0, 1]");
          pn(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t)) = v;
        }
      }
      lib.p.push_back(std::move(pn));
    }
    return lib;
  } catch (const json::exception& e) {
    throw sweep_format_error(std::string("sweep library: bad schema: ") + e.what());
  }
}

}  // namespace iontherm
