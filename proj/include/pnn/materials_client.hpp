#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "pnn/melting.hpp"

namespace pnn {

/// Remote materials-property service access. One GET per material id, JSON
/// responses mapped onto MaterialRecord fields, with an on-disk cache so a
/// repeated run never re-fetches. Any per-id failure (transport, missing
/// property, malformed value) becomes a rejection entry; the fetch as a
/// whole keeps going.
struct FetchConfig {
  std::string base_url;                       // e.g. "http://localhost:8080"
  std::string path_template = "/materials/{id}";
  std::string api_key;                        // sent as a bearer token if set
  struct FieldMap {
    std::string name = "name";
    std::string melting_K = "T_m_K";
    std::string bulk_GPa = "K_GPa";
    std::string shear_GPa = "G_GPa";
    std::string density_kgm3 = "rho_kgm3";
    std::string volume_A3 = "vol_per_atom_A3";
    std::string mass_amu = "mass_amu";
  } fields;
  std::string cache_dir;                      // empty disables caching
  int max_retries = 3;                        // transport-level retries per id
  int retry_delay_ms = 200;                   // doubled after each attempt
  int timeout_s = 5;
};

struct FetchOutcome {
  std::vector<MaterialRecord> records;
  std::vector<RejectedRow> rejected;  // row = position in the id list
  int from_cache = 0;
  int from_network = 0;
};

namespace detail {

/// Looks up a dotted path ("data.K_GPa") inside a JSON object.
inline const nlohmann::json* json_at_path(const nlohmann::json& j,
                                          const std::string& path) {
  const nlohmann::json* cur = &j;
  std::size_t start = 0;
  while (start <= path.size()) {
    const std::size_t dot = path.find('.', start);
    const std::string key = path.substr(
        start, dot == std::string::npos ? std::string::npos : dot - start);
    if (!cur->is_object() || !cur->contains(key)) return nullptr;
    cur = &(*cur)[key];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  return cur;
}

inline double require_number(const nlohmann::json& body,
                             const std::string& field) {
  const nlohmann::json* v = json_at_path(body, field);
  if (!v) throw ValidationError("missing property '" + field + "'");
  if (!v->is_number())
    throw ValidationError("property '" + field + "' is not numeric");
  return v->get<double>();
}

inline std::string require_string(const nlohmann::json& body,
                                  const std::string& field) {
  const nlohmann::json* v = json_at_path(body, field);
  if (!v) throw ValidationError("missing property '" + field + "'");
  if (!v->is_string())
    throw ValidationError("property '" + field + "' is not a string");
  return v->get<std::string>();
}

inline std::string substitute_id(const std::string& tmpl,
                                 const std::string& id) {
  const std::string token = "{id}";
  const std::size_t pos = tmpl.find(token);
  if (pos == std::string::npos)
    throw ValidationError("path template lacks an {id} placeholder");
  return tmpl.substr(0, pos) + id + tmpl.substr(pos + token.size());
}

inline std::filesystem::path cache_path(const FetchConfig& cfg,
                                        const std::string& id) {
  return std::filesystem::path(cfg.cache_dir) / (id + ".json");
}

}  // namespace detail

/// Parses one service response body into a record, converting the service's
/// lab units (GPa, cubic angstroms, amu) to SI.
inline MaterialRecord material_from_response(
    const std::string& body, const FetchConfig::FieldMap& fields) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed response body: ") + e.what());
  }
  MaterialRecord rec;
  rec.name = detail::require_string(j, fields.name);
  rec.melting_K = detail::require_number(j, fields.melting_K);
  rec.bulk_modulus_Pa = detail::require_number(j, fields.bulk_GPa) * 1e9;
  rec.shear_modulus_Pa = detail::require_number(j, fields.shear_GPa) * 1e9;
  rec.density_kgm3 = detail::require_number(j, fields.density_kgm3);
  rec.atomic_volume_m3 = detail::require_number(j, fields.volume_A3) * 1e-30;
  rec.atomic_mass_kg = detail::require_number(j, fields.mass_amu) * kAmuKg;
  validate_material(rec);
  return rec;
}

inline FetchOutcome fetch_materials(const std::vector<std::string>& ids,
                                    const FetchConfig& cfg) {
  if (cfg.base_url.empty()) throw ValidationError("no service URL configured");
  if (!cfg.cache_dir.empty())
    std::filesystem::create_directories(cfg.cache_dir);

  httplib::Client client(cfg.base_url);
  client.set_connection_timeout(cfg.timeout_s, 0);
  client.set_read_timeout(cfg.timeout_s, 0);
  httplib::Headers headers;
  if (!cfg.api_key.empty())
    headers.emplace("Authorization", "Bearer " + cfg.api_key);

  FetchOutcome out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const std::string& id = ids[i];
    std::string body;
    bool cached = false;
    if (!cfg.cache_dir.empty()) {
      std::ifstream in(detail::cache_path(cfg, id));
      if (in) {
        std::ostringstream ss;
        ss << in.rdbuf();
        body = ss.str();
        cached = true;
      }
    }

    if (!cached) {
      const std::string path = detail::substitute_id(cfg.path_template, id);
      std::string failure;
      int delay = cfg.retry_delay_ms;
      for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
        if (attempt > 0) {
          std::this_thread::sleep_for(std::chrono::milliseconds(delay));
          delay *= 2;
        }
        auto res = client.Get(path, headers);
        if (!res) {
          failure = "transport error: " + httplib::to_string(res.error());
          continue;  // worth retrying
        }
        if (res->status == 200) {
          body = res->body;
          failure.clear();
          break;
        }
        failure = "HTTP status " + std::to_string(res->status);
        if (res->status < 500) break;  // client errors are not retried
      }
      if (body.empty() && !failure.empty()) {
        out.rejected.push_back({i, id, failure});
        continue;
      }
    }

    try {
      MaterialRecord rec = material_from_response(body, cfg.fields);
      out.records.push_back(std::move(rec));
      if (cached) {
        ++out.from_cache;
      } else {
        ++out.from_network;
        if (!cfg.cache_dir.empty()) {
          std::ofstream cache_out(detail::cache_path(cfg, id));
          cache_out << body;
        }
      }
    } catch (const ValidationError& e) {
      out.rejected.push_back({i, id, e.what()});
    }
  }
  return out;
}

}  // namespace pnn
