#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "labemb/corpus.hpp"
#include "labemb/date.hpp"

namespace labemb {

/// A lab panel: codes always ordered together, sharing one lab class.
struct PanelSpec {
  std::string panel_id;
  std::vector<std::string> codes;
  std::string class_label;
  double order_rate = 0.0;
  /// Numeric panels report {LL, L, N, H, HH}; categorical ones {N, A, AA, U}.
  bool numeric = true;
  /// Per-code direction (+1 or -1) in which severity moves the latent value.
  std::vector<int> directions;
};

struct GeneratorConfig {
  int n_patients = 2000;
  int n_panels = 24;
  int min_codes_per_panel = 3;
  int max_codes_per_panel = 10;
  int n_classes = 14;
  double numeric_panel_fraction = 0.7;
  double min_order_rate = 0.03;
  double max_order_rate = 0.15;
  /// Order probability is scaled by (1 + boost * severity).
  double order_severity_boost = 0.5;

  Date timeline_start = make_date(2013, 1, 1);
  Date timeline_end = make_date(2019, 6, 30);
  int min_followup_days = 200;
  int max_followup_days = 1800;
  double mean_visit_gap_days = 90.0;

  /// Baseline severity is max * u^power for u ~ U(0,1).
  double baseline_severity_max = 1.0;
  double baseline_severity_power = 2.0;
  /// Sd of the bounded per-visit random walk.
  double severity_step_sd = 0.05;
  /// Extra severity added as death approaches, linear over `death_ramp_days`.
  double death_ramp = 0.6;
  int death_ramp_days = 120;

  /// Latent lab value z = dir * shift * s + (1 + spread * s) * eps.
  double latent_shift = 1.5;
  double latent_spread = 1.0;
  /// Cut points LL|L|N|H|HH, strictly increasing.
  std::array<double, 4> numeric_cuts = {-2.5, -1.5, 1.5, 2.5};
  /// |z| cut points N|A|AA for categorical codes.
  std::array<double, 2> categorical_cuts = {1.5, 2.5};
  double unknown_prob = 0.01;

  /// Logistic slope from mean baseline severity to death.
  double mortality_coef = 4.0;
  double mean_death_gap_days = 10.0;
  double target_positive_rate = 0.03;
  double calibration_tolerance = 0.01;

  int horizon_days = 90;
  int max_interval_days = 540;
  int alive_followup_days = 365;

  void validate() const;
};

struct SynthPatient {
  std::string patient_id;
  std::vector<Date> encounter_dates;
  /// Severity in [0, 1] per encounter (piecewise constant between visits).
  std::vector<double> severity;
  std::optional<Date> death_date;
};

struct SyntheticCohort {
  std::vector<PanelSpec> panels;
  std::vector<LabEvent> events;
  std::vector<SynthPatient> patients;
  double calibrated_intercept = 0.0;
  /// Positive rate the calibration expects from assign_prediction_dates.
  double expected_positive_rate = 0.0;
};

/// Deterministic per seed and independent of thread count. Throws
/// InfeasibleConfig when the target positive rate cannot be calibrated.
SyntheticCohort generate_cohort(const GeneratorConfig& config, std::uint64_t seed);

struct CohortRecord {
  std::string patient_id;
  Date prediction_date;
  bool label_dead_90d = false;
  std::vector<LabEvent> observation_events;
};

struct CohortOptions {
  int window_days = 30;
  int horizon_days = 90;
  int max_interval_days = 540;
  int alive_followup_days = 365;
};

struct CohortBuild {
  std::vector<CohortRecord> records;
  std::size_t excluded_alive_no_followup = 0;
  std::size_t excluded_deceased_no_encounter = 0;
};

/// Deceased: a target interval to death drawn uniformly from
/// [1, max_interval_days], snapped to the nearest encounter before death.
/// Alive: uniform among encounters followed by another at least
/// `alive_followup_days` later. Unlabelable patients are counted and skipped.
CohortBuild assign_prediction_dates(std::span<const SynthPatient> patients,
                                    std::span<const LabEvent> events,
                                    const CohortOptions& options, std::uint64_t seed);

/// Encounter strictly before `death` closest to `target`; ties go to the
/// earlier encounter. Empty when no encounter precedes death.
std::optional<Date> snap_to_encounter(std::span<const Date> sorted_encounters, Date target,
                                      Date death);

struct SurvivalObservation {
  double duration = 0.0;
  bool event = false;
};

/// Step function: survival[i] holds on [times[i], times[i+1]).
struct SurvivalCurve {
  std::vector<double> times;
  std::vector<double> survival;

  double at(double t) const;
};

/// Product-limit estimate. Throws EmptyInput.
SurvivalCurve kaplan_meier(std::span<const SurvivalObservation> observations);

/// Deceased (event at death) and alive (censored at last encounter)
/// durations measured from each record's prediction date.
struct GroupSurvival {
  SurvivalCurve deceased;
  SurvivalCurve alive;
};
GroupSurvival survival_by_group(std::span<const CohortRecord> records,
                                std::span<const SynthPatient> patients);

void write_cohort_csv(std::ostream& out, std::span<const CohortRecord> records);
struct CohortRow {
  std::string patient_id;
  Date prediction_date;
  bool label = false;
};
std::vector<CohortRow> read_cohort_csv(std::istream& in);

/// Rebuilds records from cohort rows and the event stream.
std::vector<CohortRecord> attach_observation_events(std::span<const CohortRow> rows,
                                                    std::span<const LabEvent> events,
                                                    int window_days);

void write_class_table_csv(std::ostream& out, std::span<const PanelSpec> panels);
void write_survival_csv(std::ostream& out, const GroupSurvival& curves);

}  // namespace labemb
