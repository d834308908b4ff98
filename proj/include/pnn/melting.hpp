#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "pnn/csv_io.hpp"
#include "pnn/network.hpp"
#include "pnn/rng.hpp"

namespace pnn {

/// Injectable so unit-consistency properties can rescale the unit system and
/// the constants together.
struct PhysicalConstants {
  double hbar = 1.054571817e-34;  // J s
  double kb = 1.380649e-23;       // J / K
};

/// One material in SI units.
struct MaterialRecord {
  std::string name;
  double melting_K = 0.0;         // observed melting temperature
  double bulk_modulus_Pa = 0.0;
  double shear_modulus_Pa = 0.0;
  double density_kgm3 = 0.0;
  double atomic_volume_m3 = 0.0;  // volume per atom
  double atomic_mass_kg = 0.0;
};

/// Temperature-dimensioned characteristic scales and the reduced features
/// built from them. theta0 comes from the Debye-averaged sound speed over
/// the interatomic distance a; theta1..theta3 from the same length scale
/// combined with mass, shear, and bulk stiffness. Features are ratios
/// against theta0 so they are unit-system invariant.
struct MeltFeatures {
  std::string name;
  double theta0 = 0.0, theta1 = 0.0, theta2 = 0.0, theta3 = 0.0;  // K
  double sound_speed = 0.0;  // m/s, Debye average
  double x1 = 0.0, x2 = 0.0, x3 = 0.0;
  double y = 0.0;  // melting temperature over theta0
};

/// theta0 to Debye temperature: T_D = theta0 * (6 pi^2)^(1/3).
inline double debye_factor() {
  return std::cbrt(6.0 * M_PI * M_PI);
}

inline MeltFeatures compute_features(const MaterialRecord& rec,
                                     const PhysicalConstants& consts = {},
                                     bool allow_zero_shear = false) {
  auto positive = [&](double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v))
      throw ValidationError(rec.name + ": " + what + " must be positive");
  };
  positive(rec.melting_K, "melting temperature");
  positive(rec.bulk_modulus_Pa, "bulk modulus");
  positive(rec.density_kgm3, "density");
  positive(rec.atomic_volume_m3, "atomic volume");
  positive(rec.atomic_mass_kg, "atomic mass");
  if (!(rec.shear_modulus_Pa >= 0.0) || !std::isfinite(rec.shear_modulus_Pa))
    throw ValidationError(rec.name + ": shear modulus must be non-negative");
  if (rec.shear_modulus_Pa == 0.0 && !allow_zero_shear)
    throw ValidationError(rec.name +
                          ": zero shear modulus (liquid-like), rejected");

  const double a = std::cbrt(rec.atomic_volume_m3);
  const double v_l = std::sqrt(
      (rec.bulk_modulus_Pa + 4.0 * rec.shear_modulus_Pa / 3.0) /
      rec.density_kgm3);
  double v_m;
  if (rec.shear_modulus_Pa > 0.0) {
    const double v_t = std::sqrt(rec.shear_modulus_Pa / rec.density_kgm3);
    v_m = std::pow(
        (2.0 / (v_t * v_t * v_t) + 1.0 / (v_l * v_l * v_l)) / 3.0,
        -1.0 / 3.0);
  } else {
    // No transverse branch: average over the longitudinal one alone.
    v_m = std::cbrt(3.0) * v_l;
  }

  MeltFeatures f;
  f.name = rec.name;
  f.sound_speed = v_m;
  f.theta0 = consts.hbar * v_m / (consts.kb * a);
  f.theta1 = consts.hbar * consts.hbar /
             (rec.atomic_mass_kg * a * a * consts.kb);
  f.theta2 = rec.atomic_volume_m3 * rec.shear_modulus_Pa / consts.kb;
  f.theta3 = rec.atomic_volume_m3 * rec.bulk_modulus_Pa / consts.kb;
  f.x1 = f.theta1 / f.theta0;
  f.x2 = f.theta2 / f.theta0;
  f.x3 = f.theta3 / f.theta0;
  f.y = rec.melting_K / f.theta0;
  return f;
}

inline MeltSample to_sample(const MeltFeatures& f) {
  return {f.x1, f.x2, f.x3, f.y};
}

// ---------------------------------------------------------------------------
// Materials file ingest. The file carries lab-friendly units; records are
// converted to SI. Structural problems with the file throw; problems with a
// single row land in the rejection list and ingest continues.

struct RejectedRow {
  std::size_t row = 0;  // 1-based line number in the file
  std::string name;
  std::string reason;
};

struct MaterialsIngest {
  std::vector<MaterialRecord> records;
  std::vector<RejectedRow> rejected;
};

inline const std::vector<std::string>& materials_csv_header() {
  static const std::vector<std::string> h{
      "name", "T_m_K", "K_GPa", "G_GPa", "rho_kgm3", "vol_per_atom_A3",
      "mass_amu"};
  return h;
}

inline constexpr double kAmuKg = 1.66053906660e-27;

/// Field-level checks shared by file ingest and the fetch client. Zero shear
/// modulus is legal at this stage; whether such a record is usable is decided
/// when features are computed.
inline void validate_material(const MaterialRecord& rec) {
  auto positive = [](double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v))
      throw ValidationError(std::string(what) + " must be positive");
  };
  positive(rec.melting_K, "melting temperature");
  positive(rec.bulk_modulus_Pa, "bulk modulus");
  positive(rec.density_kgm3, "density");
  positive(rec.atomic_volume_m3, "atomic volume");
  positive(rec.atomic_mass_kg, "atomic mass");
  if (!(rec.shear_modulus_Pa >= 0.0) || !std::isfinite(rec.shear_modulus_Pa))
    throw ValidationError("shear modulus must be non-negative");
}

inline MaterialsIngest materials_from_csv(const std::string& path) {
  auto rows = csv::read_rows(path);
  csv::require_header(rows, materials_csv_header(), path);
  MaterialsIngest out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& cells = rows[i];
    const std::string name = cells.empty() ? "" : cells[0];
    try {
      if (cells.size() != 7)
        throw ValidationError("expected 7 cells, got " +
                              std::to_string(cells.size()));
      MaterialRecord rec;
      rec.name = name;
      if (rec.name.empty()) throw ValidationError("empty material name");
      rec.melting_K = csv::parse_double(cells[1], "T_m_K");
      rec.bulk_modulus_Pa = csv::parse_double(cells[2], "K_GPa") * 1e9;
      rec.shear_modulus_Pa = csv::parse_double(cells[3], "G_GPa") * 1e9;
      rec.density_kgm3 = csv::parse_double(cells[4], "rho_kgm3");
      rec.atomic_volume_m3 =
          csv::parse_double(cells[5], "vol_per_atom_A3") * 1e-30;
      rec.atomic_mass_kg = csv::parse_double(cells[6], "mass_amu") * kAmuKg;
      validate_material(rec);
      out.records.push_back(std::move(rec));
    } catch (const ValidationError& e) {
      out.rejected.push_back({i + 1, name, e.what()});
    }
  }
  return out;
}

inline void materials_to_csv(const std::string& path,
                             const std::vector<MaterialRecord>& records) {
  std::vector<std::vector<std::string>> rows;
  rows.push_back(materials_csv_header());
  for (const auto& r : records)
    rows.push_back({r.name, csv::fmt(r.melting_K),
                    csv::fmt(r.bulk_modulus_Pa / 1e9),
                    csv::fmt(r.shear_modulus_Pa / 1e9),
                    csv::fmt(r.density_kgm3),
                    csv::fmt(r.atomic_volume_m3 / 1e-30),
                    csv::fmt(r.atomic_mass_kg / kAmuKg)});
  csv::write_rows(path, rows);
}

struct FeatureIngest {
  std::vector<MeltFeatures> features;
  std::vector<RejectedRow> rejected;
};

inline FeatureIngest featureize_materials(
    const std::vector<MaterialRecord>& records,
    const PhysicalConstants& consts = {}, bool allow_zero_shear = false) {
  FeatureIngest out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    try {
      out.features.push_back(
          compute_features(records[i], consts, allow_zero_shear));
    } catch (const ValidationError& e) {
      out.rejected.push_back({i, records[i].name, e.what()});
    }
  }
  return out;
}

inline void features_to_csv(const std::string& path,
                            const std::vector<MeltFeatures>& features) {
  std::vector<std::vector<std::string>> rows;
  rows.push_back({"name", "theta0_K", "theta1_K", "theta2_K", "theta3_K", "x1",
                  "x2", "x3", "y"});
  for (const auto& f : features)
    rows.push_back({f.name, csv::fmt(f.theta0), csv::fmt(f.theta1),
                    csv::fmt(f.theta2), csv::fmt(f.theta3), csv::fmt(f.x1),
                    csv::fmt(f.x2), csv::fmt(f.x3), csv::fmt(f.y)});
  csv::write_rows(path, rows);
}

inline std::vector<MeltFeatures> features_from_csv(const std::string& path) {
  auto rows = csv::read_rows(path);
  csv::require_header(rows,
                      {"name", "theta0_K", "theta1_K", "theta2_K", "theta3_K",
                       "x1", "x2", "x3", "y"},
                      path);
  std::vector<MeltFeatures> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() != 9)
      throw ValidationError("row " + std::to_string(i) + " in " + path +
                            " does not have 9 cells");
    MeltFeatures f;
    f.name = rows[i][0];
    f.theta0 = csv::parse_double(rows[i][1], path);
    f.theta1 = csv::parse_double(rows[i][2], path);
    f.theta2 = csv::parse_double(rows[i][3], path);
    f.theta3 = csv::parse_double(rows[i][4], path);
    f.x1 = csv::parse_double(rows[i][5], path);
    f.x2 = csv::parse_double(rows[i][6], path);
    f.x3 = csv::parse_double(rows[i][7], path);
    f.y = csv::parse_double(rows[i][8], path);
    out.push_back(std::move(f));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Seeded split into train / validation / test index sets.

struct SplitIndices {
  std::vector<std::size_t> train, val, test;
};

inline SplitIndices melt_split(std::size_t n, double val_fraction,
                               double test_fraction, std::uint64_t seed) {
  if (!(val_fraction >= 0.0 && test_fraction >= 0.0 &&
        val_fraction + test_fraction < 1.0))
    throw ValidationError("split fractions must be non-negative and sum < 1");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto rng = make_engine(derive_seed(seed, "melt-split"));
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t n_val = static_cast<std::size_t>(n * val_fraction);
  const std::size_t n_test = static_cast<std::size_t>(n * test_fraction);
  SplitIndices s;
  for (std::size_t i = 0; i < n; ++i) {
    if (i < n_val)
      s.val.push_back(order[i]);
    else if (i < n_val + n_test)
      s.test.push_back(order[i]);
    else
      s.train.push_back(order[i]);
  }
  return s;
}

inline std::vector<MeltSample> gather_samples(
    const std::vector<MeltFeatures>& features,
    const std::vector<std::size_t>& idx) {
  std::vector<MeltSample> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(to_sample(features[i]));
  return out;
}

// ---------------------------------------------------------------------------
// Published closed-form melting laws, in reduced coordinates. Evaluating in
// Kelvin multiplies back by theta0.

enum class MeltLaw {
  ProportionalDebye,  // y = 21.8671
  ShearCorrected,     // y = 17.553 + 0.001985 x2
  Lindemann,          // y = C / x1, C fitted
  BulkCorrected,      // y = 11.9034 + 0.000499 x3 + 0.00796 / x1
};

inline const char* melt_law_name(MeltLaw law) {
  switch (law) {
    case MeltLaw::ProportionalDebye: return "proportional-debye";
    case MeltLaw::ShearCorrected: return "shear-corrected";
    case MeltLaw::Lindemann: return "lindemann";
    case MeltLaw::BulkCorrected: return "bulk-corrected";
  }
  return "unknown";
}

/// Least-squares Lindemann constant for y ~ C / x1 over the given rows.
inline double fit_lindemann_constant(const std::vector<MeltSample>& rows) {
  double num = 0.0, den = 0.0;
  for (const auto& s : rows) {
    const double u = 1.0 / s.x1;
    num += s.y * u;
    den += u * u;
  }
  if (den == 0.0) throw ValidationError("cannot fit on empty data");
  return num / den;
}

inline double evaluate_melt_law(MeltLaw law, const MeltSample& s,
                                double lindemann_C = 0.0) {
  switch (law) {
    case MeltLaw::ProportionalDebye: return 21.8671;
    case MeltLaw::ShearCorrected: return 17.553 + 0.001985 * s.x2;
    case MeltLaw::Lindemann: return lindemann_C / s.x1;
    case MeltLaw::BulkCorrected:
      return 11.9034 + 0.000499 * s.x3 + 0.00796 / s.x1;
  }
  throw ValidationError("unknown melting law");
}

/// RMSE of a law in reduced units over the given rows.
inline double melt_law_rmse(MeltLaw law, const std::vector<MeltSample>& rows,
                            double lindemann_C = 0.0) {
  if (rows.empty()) throw ValidationError("cannot score on empty data");
  double acc = 0.0;
  for (const auto& s : rows) {
    const double d = evaluate_melt_law(law, s, lindemann_C) - s.y;
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(rows.size()));
}

/// RMSE of a law in Kelvin (predictions scaled back by each row's theta0).
inline double melt_law_rmse_kelvin(MeltLaw law,
                                   const std::vector<MeltFeatures>& rows,
                                   double lindemann_C = 0.0) {
  if (rows.empty()) throw ValidationError("cannot score on empty data");
  double acc = 0.0;
  for (const auto& f : rows) {
    const double d =
        (evaluate_melt_law(law, to_sample(f), lindemann_C) - f.y) * f.theta0;
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(rows.size()));
}

// ---------------------------------------------------------------------------
// Closed-form readout of a trained melting network. The wiring is small
// enough that the law is literally the weights.

struct MeltLawTerm {
  MeltAct act = MeltAct::Linear;
  double in_w[3] = {0.0, 0.0, 0.0};
  double out_w = 0.0;
  bool in_active[3] = {false, false, false};  // allele-level, not value-level
};

struct MeltLawReadout {
  std::string genome_id;
  double bias = 0.0;
  bool bias_active = false;
  std::vector<MeltLawTerm> terms;  // structurally active hidden neurons only

  int active_input_count() const {
    bool used[3] = {false, false, false};
    for (const auto& t : terms)
      for (int k = 0; k < 3; ++k) used[k] = used[k] || t.in_active[k];
    return (used[0] ? 1 : 0) + (used[1] ? 1 : 0) + (used[2] ? 1 : 0);
  }
};

inline MeltLawReadout readout_melting_law(const PnnNetwork& net) {
  if (net.topology.kind != TopologyKind::Melting)
    throw ValidationError("law readout applies to melting networks");
  MeltLawReadout law;
  law.genome_id = net.genome.id();
  law.bias = net.weights[12].value;
  law.bias_active = net.weights[12].allele != 0;
  for (int j = 0; j < 3; ++j) {
    if (net.weights[9 + j].allele == 0) continue;  // pruned output connection
    MeltLawTerm term;
    term.act = net.melt_act(j);
    term.out_w = net.weights[9 + j].value;
    for (int k = 0; k < 3; ++k) {
      term.in_w[k] = net.weights[3 * j + k].value;
      term.in_active[k] = net.weights[3 * j + k].allele != 0;
    }
    law.terms.push_back(term);
  }
  return law;
}

/// Evaluates the readout; must agree with the network it came from.
inline double evaluate_readout(const MeltLawReadout& law,
                               const MeltSample& s) {
  double y = law.bias;
  const double in[3] = {s.x1, s.x2, s.x3};
  for (const auto& t : law.terms) {
    double z = 0.0;
    for (int k = 0; k < 3; ++k) z += t.in_w[k] * in[k];
    y += t.out_w * melt_act_eval(t.act, z);
  }
  return y;
}

namespace detail {

inline std::string melt_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

/// Index of the single active input of a term, or -1 if not single-input.
inline int single_input(const MeltLawTerm& t) {
  int idx = -1;
  for (int k = 0; k < 3; ++k) {
    if (!t.in_active[k]) continue;
    if (idx >= 0) return -1;
    idx = k;
  }
  return idx;
}

}  // namespace detail

/// Renders the law in reduced coordinates, e.g. "y = 17.55 + 0.001985 x2".
/// Terms touching a single input fold their weights into one coefficient.
inline std::string render_melting_law(const MeltLawReadout& law) {
  std::string rhs;
  auto append = [&](const std::string& term) {
    if (term.empty()) return;
    if (!rhs.empty()) rhs += " + ";
    rhs += term;
  };
  if (law.bias_active) append(detail::melt_num(law.bias));
  for (const auto& t : law.terms) {
    const int k = detail::single_input(t);
    if (k >= 0) {
      const std::string xi = "x" + std::to_string(k + 1);
      switch (t.act) {
        case MeltAct::Linear:
          append(detail::melt_num(t.out_w * t.in_w[k]) + " " + xi);
          continue;
        case MeltAct::Reciprocal:
          append(detail::melt_num(t.out_w / t.in_w[k]) + " / " + xi);
          continue;
        case MeltAct::Square:
          append(detail::melt_num(t.out_w * t.in_w[k] * t.in_w[k]) + " " + xi +
                 "^2");
          continue;
      }
    }
    // General multi-input term.
    std::string z;
    for (int j = 0; j < 3; ++j) {
      if (!t.in_active[j]) continue;
      if (!z.empty()) z += " + ";
      z += detail::melt_num(t.in_w[j]) + " x" + std::to_string(j + 1);
    }
    if (z.empty()) z = "0";
    append(detail::melt_num(t.out_w) + " " + melt_act_name(t.act) + "(" + z +
           ")");
  }
  if (rhs.empty()) rhs = "0";
  return "y = " + rhs;
}

/// Renders in temperature form, T_m = theta0 * y, using per-term identities
/// (x_i = theta_i / theta0) when every term touches one input; falls back to
/// a theta0-scaled reduced form otherwise.
inline std::string render_melting_law_kelvin(const MeltLawReadout& law) {
  bool separable = true;
  for (const auto& t : law.terms)
    if (detail::single_input(t) < 0) separable = false;
  if (!separable) return "T_m = theta0 * (" + render_melting_law(law) + ")";

  std::string rhs;
  auto append = [&](const std::string& term) {
    if (!rhs.empty()) rhs += " + ";
    rhs += term;
  };
  if (law.bias_active) append(detail::melt_num(law.bias) + " theta0");
  for (const auto& t : law.terms) {
    const int k = detail::single_input(t);
    const std::string th = "theta" + std::to_string(k + 1);
    switch (t.act) {
      case MeltAct::Linear:
        append(detail::melt_num(t.out_w * t.in_w[k]) + " " + th);
        break;
      case MeltAct::Reciprocal:
        // c / x_i = c theta0 / theta_i; with the theta0 prefactor this is
        // c theta0^2 / theta_i.
        append(detail::melt_num(t.out_w / t.in_w[k]) + " theta0^2/" + th);
        break;
      case MeltAct::Square:
        append(detail::melt_num(t.out_w * t.in_w[k] * t.in_w[k]) + " " + th +
               "^2/theta0");
        break;
    }
  }
  if (rhs.empty()) rhs = "0";
  return "T_m = " + rhs;
}

}  // namespace pnn
