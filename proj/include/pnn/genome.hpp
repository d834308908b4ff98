#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "pnn/activation.hpp"
#include "pnn/error.hpp"
#include "pnn/rng.hpp"

namespace pnn {

enum class TopologyKind : std::uint8_t { Dynamics = 0, Melting = 1 };

/// Fixed wiring of a candidate network. Only allele choices evolve; the graph
/// itself never does. The dynamics variant needs the data time step because
/// several fixed weight values are expressed in units of it.
struct Topology {
  TopologyKind kind = TopologyKind::Dynamics;
  double dt = 0.0;

  static Topology dynamics(double dt) {
    if (!(dt > 0.0)) throw ValidationError("data time step must be positive");
    return {TopologyKind::Dynamics, dt};
  }
  static Topology melting() { return {TopologyKind::Melting, 0.0}; }

  int weight_slots() const { return kind == TopologyKind::Dynamics ? 20 : 13; }
  int activation_slots() const {
    return kind == TopologyKind::Dynamics ? 6 : 3;
  }
  int weight_allele_count() const {
    return kind == TopologyKind::Dynamics ? 8 : 3;
  }
  int activation_allele_count() const {
    return kind == TopologyKind::Dynamics ? 4 : 3;
  }
};

// ---------------------------------------------------------------------------
// Weight alleles.
//
// Dynamics slots draw from eight settings: seven fixed constants
//   0, 1/2, 1, 2, dt/2, dt, 2dt
// and one trainable slot. Melting slots draw from fixed 0, fixed 1, trainable.
// Codes index these tables directly.

inline constexpr std::uint8_t kTrainableDynamics = 7;
inline constexpr std::uint8_t kTrainableMelting = 2;

inline bool weight_allele_trainable(TopologyKind kind, std::uint8_t code) {
  return code == (kind == TopologyKind::Dynamics ? kTrainableDynamics
                                                 : kTrainableMelting);
}

/// Value of a fixed weight allele; trainable codes have no fixed value.
inline double fixed_weight_value(const Topology& topo, std::uint8_t code) {
  if (topo.kind == TopologyKind::Dynamics) {
    switch (code) {
      case 0: return 0.0;
      case 1: return 0.5;
      case 2: return 1.0;
      case 3: return 2.0;
      case 4: return 0.5 * topo.dt;
      case 5: return topo.dt;
      case 6: return 2.0 * topo.dt;
    }
  } else {
    switch (code) {
      case 0: return 0.0;
      case 1: return 1.0;
    }
  }
  throw ValidationError("weight allele has no fixed value");
}

inline const char* weight_allele_tag(TopologyKind kind, std::uint8_t code) {
  if (kind == TopologyKind::Dynamics) {
    static constexpr const char* tags[7] = {"0",       "half", "1", "2",
                                            "dt_half", "dt",   "2dt"};
    if (code < 7) return tags[code];
  } else {
    static constexpr const char* tags[2] = {"0", "1"};
    if (code < 2) return tags[code];
  }
  throw ValidationError("weight allele has no fixed-value tag");
}

inline std::uint8_t weight_allele_from_tag(TopologyKind kind,
                                           const std::string& tag) {
  const int n = kind == TopologyKind::Dynamics ? 7 : 2;
  for (std::uint8_t c = 0; c < n; ++c)
    if (tag == weight_allele_tag(kind, c)) return c;
  throw ValidationError("unknown fixed-weight tag '" + tag + "'");
}

/// Parsimony score of one weight gene: fixed zero prunes the connection and
/// costs nothing, any other fixed constant costs 1, a trainable weight 2.
inline int weight_allele_score(TopologyKind kind, std::uint8_t code) {
  if (weight_allele_trainable(kind, code)) return 2;
  return code == 0 ? 0 : 1;
}

inline int activation_allele_score(TopologyKind kind, std::uint8_t code) {
  return kind == TopologyKind::Dynamics
             ? act_score(static_cast<Act>(code))
             : melt_act_score(static_cast<MeltAct>(code));
}

// ---------------------------------------------------------------------------

struct Genome {
  TopologyKind kind = TopologyKind::Dynamics;
  std::vector<std::uint8_t> weight_alleles;
  std::vector<std::uint8_t> activation_alleles;

  bool operator==(const Genome&) const = default;

  /// Stable identifier: hash of kind plus the full allele string. Two genomes
  /// share an id exactly when they are locus-for-locus identical.
  std::string id() const {
    std::string bytes;
    bytes.reserve(2 + weight_alleles.size() + activation_alleles.size());
    bytes.push_back(static_cast<char>(kind));
    bytes.push_back('|');
    for (auto a : weight_alleles) bytes.push_back(static_cast<char>('0' + a));
    bytes.push_back('|');
    for (auto a : activation_alleles)
      bytes.push_back(static_cast<char>('0' + a));
    const std::uint64_t h = fnv1a64(bytes);
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(h));
    return buf;
  }
};

inline void validate_genome(const Genome& g, const Topology& topo) {
  if (g.kind != topo.kind)
    throw ValidationError("genome and topology kinds differ");
  if (static_cast<int>(g.weight_alleles.size()) != topo.weight_slots())
    throw ValidationError("expected " + std::to_string(topo.weight_slots()) +
                          " weight genes, got " +
                          std::to_string(g.weight_alleles.size()));
  if (static_cast<int>(g.activation_alleles.size()) != topo.activation_slots())
    throw ValidationError(
        "expected " + std::to_string(topo.activation_slots()) +
        " activation genes, got " + std::to_string(g.activation_alleles.size()));
  for (std::size_t i = 0; i < g.weight_alleles.size(); ++i)
    if (g.weight_alleles[i] >= topo.weight_allele_count())
      throw ValidationError("weight gene " + std::to_string(i) +
                            " has out-of-range allele " +
                            std::to_string(g.weight_alleles[i]));
  for (std::size_t i = 0; i < g.activation_alleles.size(); ++i)
    if (g.activation_alleles[i] >= topo.activation_allele_count())
      throw ValidationError("activation gene " + std::to_string(i) +
                            " has out-of-range allele " +
                            std::to_string(g.activation_alleles[i]));
}

inline Genome random_genome(const Topology& topo, std::mt19937_64& rng) {
  Genome g;
  g.kind = topo.kind;
  std::uniform_int_distribution<int> wdist(0, topo.weight_allele_count() - 1);
  std::uniform_int_distribution<int> adist(0,
                                           topo.activation_allele_count() - 1);
  g.weight_alleles.resize(topo.weight_slots());
  g.activation_alleles.resize(topo.activation_slots());
  for (auto& a : g.weight_alleles) a = static_cast<std::uint8_t>(wdist(rng));
  for (auto& a : g.activation_alleles)
    a = static_cast<std::uint8_t>(adist(rng));
  return g;
}

}  // namespace pnn
