#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "bessd/dispatch_env.hpp"
#include "bessd/q_learner.hpp"

namespace bessd {

/// One row of a profile CSV. Timestamps are hours from the start.
struct ProfileRow {
  double timestamp = 0.0;
  double p_pv = 0.0;
  double p_ev = 0.0;
  double p_other_load = 0.0;
  double tariff_buy = 0.0;
  double tariff_sell = 0.0;
  double p_pcc_set = 0.0;
  std::optional<double> p_sum_forecast;

  /// Net non-dispatchable injection: PV minus EV minus other load.
  double p_sum() const noexcept { return p_pv - p_ev - p_other_load; }
};

struct ProfileTimeline {
  std::vector<ProfileRow> rows;
  double step_hours = 1.0;

  std::size_t size() const noexcept { return rows.size(); }
  /// Throws GapError for non-uniform spacing, InvalidArgument for negative
  /// tariffs or an empty timeline.
  void validate() const;
  std::vector<ExogenousStep> exogenous() const;
  /// Forecast column where present, otherwise the realized p_sum.
  std::vector<double> forecasts() const;
  /// Hour of day (0..23) of each row.
  std::vector<std::size_t> hours_of_day() const;
};

/// Required header, in order; `p_sum_forecast` may follow as an eighth column.
inline constexpr const char* kProfileColumns[] = {"timestamp",  "p_pv",        "p_ev",     "p_other_load",
                                                  "tariff_buy", "tariff_sell", "p_pcc_set"};

/// Throws IoError, SchemaError (header mismatch or malformed numbers) or
/// GapError (non-uniform timestamps).
ProfileTimeline load_profiles(const std::filesystem::path& path);
void write_profiles(const ProfileTimeline& timeline, const std::filesystem::path& path);

enum class Season { Spring, Summer, Autumn, Winter };
Season parse_season(const std::string& name);
std::string to_string(Season s);

/// Two-level time-of-use tariff: 1.02 from 08:00 to 22:00, 0.51 otherwise.
double tou_tariff(double hour_of_day) noexcept;

/// Seeded synthetic hourly timeline: a daylight PV bell on 40 kW + 20 kW of
/// rating, EV demand in whole 7 kW charging posts (15 posts), residential
/// load with an evening peak, the TOU tariff (same price both directions)
/// and a 50 kW PCC setpoint. Seasons scale irradiance and load. The
/// `p_sum_forecast` column holds the expected injection.
ProfileTimeline synth_profiles(Season season, int days, std::uint64_t seed);

/// Forecast errors (realized minus forecast p_sum) grouped by hour of day.
struct ErrorHistory {
  std::vector<std::vector<double>> by_hour = std::vector<std::vector<double>>(24);
};

/// CSV with header `hour_of_day,error_kw`.
ErrorHistory load_error_history(const std::filesystem::path& path);
void write_error_history(const ErrorHistory& history, const std::filesystem::path& path);
/// Errors of a synthetic timeline against its own forecast column.
ErrorHistory error_history_of(const ProfileTimeline& timeline);

/// Learner view of a profile: realized rows plus per-hour error buckets.
TrainingTimeline make_training_timeline(const ProfileTimeline& profile, const ErrorHistory& history,
                                        double initial_soc, double confidence_level);

}  // namespace bessd
