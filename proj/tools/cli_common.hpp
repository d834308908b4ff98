#pragma once

// Shared command-line plumbing: layered config resolution (defaults, then a
// JSON config file, then explicit flags), content-addressed run directories,
// and the manifest every run writes. Nothing here knows about any particular
// subcommand.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pnn/serialize.hpp"

namespace pnncli {

using pnn::ojson;

/// Bad invocation (unknown key, missing required parameter). Distinct from
/// pnn::ValidationError, which covers bad *data*; the two map to different
/// exit codes.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Config hashing. The run directory name derives from the resolved config,
// so re-running the same configuration lands in the same place and nothing
// depends on clocks. Location (`out`) and scheduling (`threads`) are echoed
// in the manifest but excluded from the hash: they change where results go
// and how fast they arrive, never what they contain.

inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string config_hash(const ojson& config) {
  ojson hashed = config;
  hashed.erase("out");
  hashed.erase("threads");
  const std::uint64_t h = fnv1a64(hashed.dump());
  static const char* digits = "0123456789abcdef";
  std::string hex;
  for (int i = 15; i >= 8; --i) hex += digits[(h >> (4 * i)) & 0xF];
  return hex;
}

// ---------------------------------------------------------------------------
// Layered option resolution. Each option registers a default, a JSON key,
// and a CLI11 flag; resolve() applies file values over defaults and flag
// values over both, rejecting unknown file keys so typos fail loudly.

class ConfigBuilder {
 public:
  explicit ConfigBuilder(CLI::App* cmd) : cmd_(cmd) {
    cmd_->add_option("--config", config_path_,
                     "JSON config file; explicit flags override its values");
  }

  template <class T>
  void add(const std::string& flag, const std::string& key, const T& init,
           const std::string& desc, bool comma_list = false) {
    defaults_[key] = init;
    auto store = std::make_shared<T>(init);
    CLI::Option* opt = cmd_->add_option(flag, *store, desc);
    if (comma_list) opt->delimiter(',');
    appliers_.push_back([opt, store, key](ojson& j) {
      if (opt->count() > 0) j[key] = *store;
    });
  }

  void add_flag(const std::string& flag, const std::string& key, bool init,
                const std::string& desc) {
    defaults_[key] = init;
    auto store = std::make_shared<bool>(init);
    CLI::Option* opt = cmd_->add_flag(flag, *store, desc);
    appliers_.push_back([opt, store, key](ojson& j) {
      if (opt->count() > 0) j[key] = *store;
    });
  }

  /// Defaults <- config file <- explicit flags, in that order.
  ojson resolve() const {
    ojson cfg = defaults_;
    if (!config_path_.empty()) {
      ojson file;
      try {
        file = pnn::read_json_file(config_path_);
      } catch (const pnn::ValidationError& e) {
        throw UsageError(e.what());
      }
      if (!file.is_object())
        throw UsageError("config file " + config_path_ +
                         " must hold a JSON object");
      for (const auto& [key, value] : file.items()) {
        if (!cfg.contains(key))
          throw UsageError("config file " + config_path_ +
                           " has unknown key '" + key + "'");
        if (cfg[key].type() != value.type() &&
            !(cfg[key].is_number() && value.is_number()))
          throw UsageError("config file " + config_path_ + " key '" + key +
                           "' has the wrong type");
        cfg[key] = value;
      }
    }
    for (const auto& apply : appliers_) apply(cfg);
    return cfg;
  }

 private:
  CLI::App* cmd_;
  std::string config_path_;
  ojson defaults_ = ojson::object();
  std::vector<std::function<void(ojson&)>> appliers_;
};

// ---------------------------------------------------------------------------
// Run directories and manifests.

struct RunContext {
  std::filesystem::path dir;
  std::string hash;
  ojson config;
  std::string mode;
  std::vector<std::string> artifacts;

  std::string path(const std::string& name) const {
    return (dir / name).string();
  }
  void note(const std::string& name) { artifacts.push_back(name); }
};

/// Creates (or reuses) the run directory `<out>/<mode>-<hash8>`.
inline RunContext open_run(const std::string& mode, const ojson& config) {
  RunContext ctx;
  ctx.mode = mode;
  ctx.config = config;
  ctx.hash = config_hash(config);
  const std::string out = config.at("out").get<std::string>();
  ctx.dir = std::filesystem::path(out) / (mode + "-" + ctx.hash);
  std::filesystem::create_directories(ctx.dir);
  return ctx;
}

/// Every run ends by writing manifest.json: the mode, the hash the directory
/// name came from, the fully resolved config, and the artifact list. `extra`
/// lets a mode embed additional result blocks (evolution history, hall of
/// fame) without changing the common shape.
inline void write_manifest(RunContext& ctx,
                           const ojson& extra = ojson::object()) {
  ojson m;
  m["mode"] = ctx.mode;
  m["config_hash"] = ctx.hash;
  m["config"] = ctx.config;
  ctx.note("manifest.json");
  m["artifacts"] = ctx.artifacts;
  for (const auto& [key, value] : extra.items()) m[key] = value;
  pnn::write_json_file(ctx.path("manifest.json"), m);
}

// ---------------------------------------------------------------------------
// Small shared readers.

inline std::string require_path(const ojson& cfg, const std::string& key,
                                const std::string& what) {
  const std::string v = cfg.at(key).get<std::string>();
  if (v.empty()) throw UsageError("missing required " + what + " (--" + key + ")");
  return v;
}

/// Loads a prior run directory's manifest, the handle every consumer uses to
/// recover the producing configuration (timestep, damping, energies).
inline ojson read_run_manifest(const std::string& run_dir) {
  const auto p = std::filesystem::path(run_dir) / "manifest.json";
  if (!std::filesystem::exists(p))
    throw pnn::ValidationError("no manifest.json under " + run_dir +
                               "; expected a run directory");
  return pnn::read_json_file(p.string());
}

}  // namespace pnncli
