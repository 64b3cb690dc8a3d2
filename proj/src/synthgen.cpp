#include "labemb/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <unordered_map>

#include "labemb/error.hpp"
#include "labemb/random.hpp"
#include "labemb/util.hpp"

namespace labemb {

namespace {

constexpr const char* kClassNames[] = {
    "CHEM", "HEM/BC", "UA", "MICRO", "ABXBACT", "SERO", "COAG", "DRUG/TOX",
    "PULM", "ALLERGY", "BLDBK", "CELLMARK", "HLA", "SPEC", "FERT", "CYTO"};

/// LOINC-style mod-10 check digit.
int check_digit(long number) {
  std::string digits = std::to_string(number);
  int sum = 0;
  bool dbl = true;
  for (auto it = digits.rbegin(); it != digits.rend(); ++it) {
    int d = *it - '0';
    if (dbl) {
      d *= 2;
      if (d > 9) d -= 9;
    }
    sum += d;
    dbl = !dbl;
  }
  return (10 - sum % 10) % 10;
}

std::string loinc_like(long number) { return std::to_string(number) + "-" + std::to_string(check_digit(number)); }

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

std::vector<PanelSpec> make_panels(const GeneratorConfig& cfg, std::uint64_t seed) {
  Rng rng(derive_seed(seed, "panels"));
  std::vector<PanelSpec> panels;
  long next_code = 1000;
  const int n_classes = std::min<int>(cfg.n_classes, static_cast<int>(std::size(kClassNames)));
  for (int p = 0; p < cfg.n_panels; ++p) {
    PanelSpec panel;
    char id[16];
    std::snprintf(id, sizeof id, "PANEL%02d", p + 1);
    panel.panel_id = id;
    // Uneven class sizes so the "10 largest classes" legend is meaningful.
    const int cls = p < n_classes ? p : static_cast<int>(rng.below(static_cast<std::uint64_t>(std::max(1, n_classes / 2))));
    panel.class_label = kClassNames[cls];
    panel.order_rate = rng.uniform(cfg.min_order_rate, cfg.max_order_rate);
    panel.numeric = rng.uniform() < cfg.numeric_panel_fraction;
    const auto n_codes = rng.between(cfg.min_codes_per_panel, cfg.max_codes_per_panel);
    for (std::int64_t c = 0; c < n_codes; ++c) {
      next_code += 1 + static_cast<long>(rng.below(40));
      panel.codes.push_back(loinc_like(next_code));
      panel.directions.push_back(rng.bernoulli(0.5) ? 1 : -1);
    }
    panels.push_back(std::move(panel));
  }
  return panels;
}

/// Everything about a patient that does not depend on the death decision.
struct PatientDraft {
  std::vector<Date> encounters;
  std::vector<double> base_severity;
  double mean_severity = 0.0;
  Date potential_death;
  double death_uniform = 0.0;
  double label_prob_if_dead = 0.0;
  bool alive_eligible = false;
};

PatientDraft draft_patient(const GeneratorConfig& cfg, std::uint64_t seed) {
  Rng rng(seed);
  PatientDraft d;
  const auto followup = rng.between(cfg.min_followup_days, cfg.max_followup_days);
  const std::int32_t span = cfg.timeline_end - cfg.timeline_start;
  const auto latest_start = std::max<std::int64_t>(0, span - followup);
  const Date first = cfg.timeline_start + static_cast<std::int32_t>(rng.between(0, latest_start));
  const Date last_allowed = first + static_cast<std::int32_t>(followup);
  Date t = first;
  while (t <= last_allowed) {
    d.encounters.push_back(t);
    t = t + std::max<std::int32_t>(1, static_cast<std::int32_t>(std::lround(rng.exponential(cfg.mean_visit_gap_days))));
  }
  double s = cfg.baseline_severity_max * std::pow(rng.uniform(), cfg.baseline_severity_power);
  for (std::size_t v = 0; v < d.encounters.size(); ++v) {
    if (v > 0) s = std::clamp(s + cfg.severity_step_sd * rng.normal(), 0.0, 1.0);
    d.base_severity.push_back(s);
    d.mean_severity += s;
  }
  d.mean_severity /= static_cast<double>(d.encounters.size());
  d.potential_death = d.encounters.back() +
                      std::max<std::int32_t>(1, static_cast<std::int32_t>(std::lround(rng.exponential(cfg.mean_death_gap_days))));
  d.death_uniform = rng.uniform();

  int positives = 0;
  for (int interval = 1; interval <= cfg.max_interval_days; ++interval) {
    auto snapped = snap_to_encounter(d.encounters, d.potential_death - interval, d.potential_death);
    if (snapped && d.potential_death - *snapped <= cfg.horizon_days) ++positives;
  }
  d.label_prob_if_dead = static_cast<double>(positives) / cfg.max_interval_days;
  d.alive_eligible = d.encounters.back() - d.encounters.front() >= cfg.alive_followup_days;
  return d;
}

double expected_rate(const std::vector<PatientDraft>& drafts, double intercept, double coef) {
  double num = 0.0, den = 0.0;
  for (const auto& d : drafts) {
    const double p = sigmoid(intercept + coef * d.mean_severity);
    num += p * d.label_prob_if_dead;
    den += p + (1.0 - p) * (d.alive_eligible ? 1.0 : 0.0);
  }
  return den > 0 ? num / den : 0.0;
}

Abnormality draw_abnormality(const GeneratorConfig& cfg, const PanelSpec& panel, std::size_t code,
                             double s, Rng& rng) {
  const double eps = rng.normal();
  const double u = rng.uniform();
  const double z = panel.directions[code] * cfg.latent_shift * s + (1.0 + cfg.latent_spread * s) * eps;
  if (panel.numeric) {
    const auto& c = cfg.numeric_cuts;
    if (z < c[0]) return Abnormality::LL;
    if (z < c[1]) return Abnormality::L;
    if (z <= c[2]) return Abnormality::N;
    if (z <= c[3]) return Abnormality::H;
    return Abnormality::HH;
  }
  if (u < cfg.unknown_prob) return Abnormality::U;
  const double m = std::abs(z);
  if (m > cfg.categorical_cuts[1]) return Abnormality::AA;
  if (m > cfg.categorical_cuts[0]) return Abnormality::A;
  return Abnormality::N;
}

std::vector<LabEvent> patient_events(const GeneratorConfig& cfg, const std::vector<PanelSpec>& panels,
                                     const SynthPatient& patient, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<LabEvent> events;
  char buf[16];
  for (std::size_t v = 0; v < patient.encounter_dates.size(); ++v) {
    const double s = patient.severity[v];
    std::snprintf(buf, sizeof buf, "V%03zu", v + 1);
    const std::string visit_id = buf;
    std::vector<std::size_t> ordered;
    for (std::size_t p = 0; p < panels.size(); ++p) {
      const double rate = std::min(1.0, panels[p].order_rate * (1.0 + cfg.order_severity_boost * s));
      if (rng.uniform() < rate) ordered.push_back(p);
    }
    if (ordered.empty()) ordered.push_back(rng.below(panels.size()));
    int order_no = 0;
    for (auto p : ordered) {
      std::snprintf(buf, sizeof buf, "O%02d", ++order_no);
      const std::string order_id = buf;
      const auto& panel = panels[p];
      for (std::size_t c = 0; c < panel.codes.size(); ++c) {
        events.push_back(LabEvent{patient.patient_id, visit_id, order_id, patient.encounter_dates[v],
                                  panel.codes[c], draw_abnormality(cfg, panel, c, s, rng)});
      }
    }
  }
  return events;
}

}  // namespace

void GeneratorConfig::validate() const {
  if (n_patients < 1 || n_panels < 1) throw InvalidArgument("need at least one patient and one panel");
  if (min_codes_per_panel < 1 || max_codes_per_panel < min_codes_per_panel) {
    throw InvalidArgument("bad codes-per-panel range");
  }
  if (!(min_order_rate >= 0 && max_order_rate <= 1 && min_order_rate <= max_order_rate)) {
    throw InvalidArgument("order rates must lie in [0, 1]");
  }
  for (std::size_t i = 1; i < numeric_cuts.size(); ++i) {
    if (!(numeric_cuts[i] > numeric_cuts[i - 1])) throw InvalidArgument("numeric cut points must increase strictly");
  }
  if (!(categorical_cuts[0] > 0 && categorical_cuts[1] > categorical_cuts[0])) {
    throw InvalidArgument("categorical cut points must increase strictly");
  }
  if (!(target_positive_rate > 0 && target_positive_rate < 1)) {
    throw InvalidArgument("target positive rate must be in (0, 1)");
  }
  if (timeline_end - timeline_start < max_followup_days) throw InvalidArgument("timeline shorter than follow-up");
  if (min_followup_days < 1 || max_followup_days < min_followup_days) throw InvalidArgument("bad follow-up range");
  if (!(mean_visit_gap_days > 0)) throw InvalidArgument("visit gap must be positive");
  if (horizon_days < 1 || max_interval_days < 1) throw InvalidArgument("horizon and interval must be >= 1");
}

std::optional<Date> snap_to_encounter(std::span<const Date> sorted_encounters, Date target,
                                      Date death) {
  auto end = std::lower_bound(sorted_encounters.begin(), sorted_encounters.end(), death);
  if (end == sorted_encounters.begin()) return std::nullopt;
  auto it = std::lower_bound(sorted_encounters.begin(), end, target);
  if (it == end) return *(end - 1);
  if (it == sorted_encounters.begin()) return *it;
  const Date after = *it, before = *(it - 1);
  return (after - target) < (target - before) ? after : before;
}

SyntheticCohort generate_cohort(const GeneratorConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  SyntheticCohort out;
  out.panels = make_panels(cfg, seed);

  const auto n = static_cast<std::size_t>(cfg.n_patients);
  std::vector<PatientDraft> drafts(n);
  const std::uint64_t draft_seed = derive_seed(seed, "patients");
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    drafts[static_cast<std::size_t>(i)] = draft_patient(cfg, derive_seed(draft_seed, static_cast<std::uint64_t>(i)));
  }

  // Bisection on the intercept; the expected rate increases with it.
  double lo = -40.0, hi = 40.0;
  const double target = cfg.target_positive_rate;
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (expected_rate(drafts, mid, cfg.mortality_coef) < target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  out.calibrated_intercept = 0.5 * (lo + hi);
  out.expected_positive_rate = expected_rate(drafts, out.calibrated_intercept, cfg.mortality_coef);
  if (std::abs(out.expected_positive_rate - target) > cfg.calibration_tolerance) {
    throw InfeasibleConfig("calibration reaches a positive rate of " + format_g6(out.expected_positive_rate) +
                           ", target " + format_g6(target));
  }

  out.patients.resize(n);
  std::vector<std::vector<LabEvent>> per_patient(n);
  const std::uint64_t event_seed = derive_seed(seed, "events");
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(n); ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    const auto& d = drafts[i];
    SynthPatient& p = out.patients[i];
    char id[16];
    std::snprintf(id, sizeof id, "P%06zu", i + 1);
    p.patient_id = id;
    p.encounter_dates = d.encounters;
    p.severity = d.base_severity;
    const double p_death = sigmoid(out.calibrated_intercept + cfg.mortality_coef * d.mean_severity);
    if (d.death_uniform < p_death) {
      p.death_date = d.potential_death;
      for (std::size_t v = 0; v < p.severity.size(); ++v) {
        const double days_left = static_cast<double>(d.potential_death - p.encounter_dates[v]);
        const double ramp = std::max(0.0, 1.0 - days_left / cfg.death_ramp_days);
        p.severity[v] = std::min(1.0, p.severity[v] + cfg.death_ramp * ramp);
      }
    }
    per_patient[i] = patient_events(cfg, out.panels, p, derive_seed(event_seed, static_cast<std::uint64_t>(i)));
  }
  std::size_t total = 0;
  for (const auto& v : per_patient) total += v.size();
  out.events.reserve(total);
  for (auto& v : per_patient) {
    std::move(v.begin(), v.end(), std::back_inserter(out.events));
  }
  return out;
}

namespace {

std::unordered_map<std::string, std::vector<std::size_t>> events_by_patient(std::span<const LabEvent> events) {
  std::unordered_map<std::string, std::vector<std::size_t>> index;
  for (std::size_t i = 0; i < events.size(); ++i) index[events[i].patient_id].push_back(i);
  return index;
}

std::vector<LabEvent> window_events(std::span<const LabEvent> events, const std::vector<std::size_t>* idx,
                                    Date prediction, int window_days) {
  std::vector<LabEvent> out;
  if (!idx) return out;
  for (auto i : *idx) {
    const auto& e = events[i];
    if (e.timestamp >= prediction - window_days && e.timestamp <= prediction) out.push_back(e);
  }
  return out;
}

}  // namespace

CohortBuild assign_prediction_dates(std::span<const SynthPatient> patients,
                                    std::span<const LabEvent> events,
                                    const CohortOptions& options, std::uint64_t seed) {
  if (options.window_days < 1 || options.horizon_days < 1) {
    throw InvalidArgument("window and horizon must be >= 1 day");
  }
  const auto index = events_by_patient(events);
  CohortBuild build;
  const std::uint64_t base = derive_seed(seed, "prediction-dates");
  for (std::size_t i = 0; i < patients.size(); ++i) {
    const auto& p = patients[i];
    Rng rng(derive_seed(base, static_cast<std::uint64_t>(i)));
    std::vector<Date> enc = p.encounter_dates;
    std::sort(enc.begin(), enc.end());
    CohortRecord rec;
    rec.patient_id = p.patient_id;
    if (p.death_date) {
      const auto interval = static_cast<std::int32_t>(rng.between(1, options.max_interval_days));
      auto snapped = snap_to_encounter(enc, *p.death_date - interval, *p.death_date);
      if (!snapped) {
        ++build.excluded_deceased_no_encounter;
        continue;
      }
      rec.prediction_date = *snapped;
      rec.label_dead_90d = *p.death_date - *snapped <= options.horizon_days;
    } else {
      std::vector<Date> candidates;
      for (auto d : enc) {
        if (!enc.empty() && enc.back() - d >= options.alive_followup_days) candidates.push_back(d);
      }
      if (candidates.empty()) {
        ++build.excluded_alive_no_followup;
        continue;
      }
      rec.prediction_date = candidates[rng.below(candidates.size())];
      rec.label_dead_90d = false;
    }
    auto it = index.find(p.patient_id);
    rec.observation_events = window_events(events, it == index.end() ? nullptr : &it->second,
                                           rec.prediction_date, options.window_days);
    build.records.push_back(std::move(rec));
  }
  return build;
}

double SurvivalCurve::at(double t) const {
  double s = 1.0;
  for (std::size_t i = 0; i < times.size() && times[i] <= t; ++i) s = survival[i];
  return s;
}

SurvivalCurve kaplan_meier(std::span<const SurvivalObservation> observations) {
  if (observations.empty()) throw EmptyInput("no survival observations");
  std::vector<SurvivalObservation> obs(observations.begin(), observations.end());
  for (const auto& o : obs) {
    if (!(o.duration >= 0)) throw InvalidArgument("durations must be non-negative");
  }
  std::sort(obs.begin(), obs.end(), [](const auto& a, const auto& b) { return a.duration < b.duration; });
  SurvivalCurve curve;
  double s = 1.0;
  std::size_t at_risk = obs.size();
  std::size_t i = 0;
  while (i < obs.size()) {
    const double t = obs[i].duration;
    std::size_t deaths = 0, leaving = 0;
    while (i < obs.size() && obs[i].duration == t) {
      if (obs[i].event) ++deaths;
      ++leaving;
      ++i;
    }
    if (deaths > 0) {
      if (curve.times.empty() && t > 0) {
        curve.times.push_back(0.0);
        curve.survival.push_back(1.0);
      }
      s *= 1.0 - static_cast<double>(deaths) / static_cast<double>(at_risk);
      curve.times.push_back(t);
      curve.survival.push_back(s);
    }
    at_risk -= leaving;
  }
  if (curve.times.empty()) {
    curve.times.push_back(0.0);
    curve.survival.push_back(1.0);
  }
  return curve;
}

GroupSurvival survival_by_group(std::span<const CohortRecord> records,
                                std::span<const SynthPatient> patients) {
  std::unordered_map<std::string, const SynthPatient*> by_id;
  for (const auto& p : patients) by_id[p.patient_id] = &p;
  std::vector<SurvivalObservation> dead, alive;
  for (const auto& r : records) {
    auto it = by_id.find(r.patient_id);
    if (it == by_id.end()) continue;
    const SynthPatient& p = *it->second;
    if (p.death_date) {
      dead.push_back({static_cast<double>(*p.death_date - r.prediction_date), true});
    } else {
      const Date last = *std::max_element(p.encounter_dates.begin(), p.encounter_dates.end());
      alive.push_back({static_cast<double>(last - r.prediction_date), false});
    }
  }
  GroupSurvival g;
  if (!dead.empty()) g.deceased = kaplan_meier(dead);
  if (!alive.empty()) g.alive = kaplan_meier(alive);
  return g;
}

void write_cohort_csv(std::ostream& out, std::span<const CohortRecord> records) {
  out << "patient_id,prediction_date,label\n";
  for (const auto& r : records) {
    out << r.patient_id << ',' << format_date(r.prediction_date) << ',' << (r.label_dead_90d ? 1 : 0) << '\n';
  }
}

std::vector<CohortRow> read_cohort_csv(std::istream& in) {
  std::vector<CohortRow> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno == 1) {
      if (line != "patient_id,prediction_date,label") throw MalformedRecord(1, "bad cohort header");
      continue;
    }
    if (trim(line).empty()) continue;
    auto f = split(line, ',');
    if (f.size() != 3) throw MalformedRecord(lineno, "expected 3 fields");
    auto d = parse_date(f[1]);
    if (!d) throw MalformedRecord(lineno, "bad prediction date");
    if (f[2] != "0" && f[2] != "1") throw MalformedRecord(lineno, "label must be 0 or 1");
    rows.push_back({std::string(f[0]), *d, f[2] == "1"});
  }
  return rows;
}

std::vector<CohortRecord> attach_observation_events(std::span<const CohortRow> rows,
                                                    std::span<const LabEvent> events,
                                                    int window_days) {
  const auto index = events_by_patient(events);
  std::vector<CohortRecord> records;
  records.reserve(rows.size());
  for (const auto& r : rows) {
    auto it = index.find(r.patient_id);
    records.push_back({r.patient_id, r.prediction_date, r.label,
                       window_events(events, it == index.end() ? nullptr : &it->second,
                                     r.prediction_date, window_days)});
  }
  return records;
}

void write_class_table_csv(std::ostream& out, std::span<const PanelSpec> panels) {
  out << "loinc,class_label\n";
  for (const auto& p : panels) {
    for (const auto& c : p.codes) out << c << ',' << p.class_label << '\n';
  }
}

void write_survival_csv(std::ostream& out, const GroupSurvival& curves) {
  out << "t,survival,group\n";
  auto emit = [&](const SurvivalCurve& c, const char* group) {
    for (std::size_t i = 0; i < c.times.size(); ++i) {
      out << format_g6(c.times[i]) << ',' << format_g6(c.survival[i]) << ',' << group << '\n';
    }
  };
  emit(curves.deceased, "deceased");
  emit(curves.alive, "alive");
}

}  // namespace labemb
