#include "bessd/profiles.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <boost/algorithm/string.hpp>
#include <fmt/format.h>

#include "bessd/errors.hpp"
#include "bessd/rng.hpp"

namespace bessd {

namespace {

std::vector<std::string> split_csv_line(std::string line) {
  boost::algorithm::trim(line);
  std::vector<std::string> cells;
  boost::algorithm::split(cells, line, boost::algorithm::is_any_of(","));
  for (auto& c : cells) boost::algorithm::trim(c);
  return cells;
}

double parse_number(const std::string& cell, std::size_t line, const std::string& column) {
  double v = 0.0;
  const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (res.ec != std::errc() || res.ptr != cell.data() + cell.size() || !std::isfinite(v)) {
    throw SchemaError(fmt::format("line {}: column '{}' is not a number: '{}'", line, column, cell));
  }
  return v;
}

}  // namespace

void ProfileTimeline::validate() const {
  if (rows.empty()) throw InvalidArgument("profile has no rows");
  if (!(step_hours > 0.0)) throw InvalidArgument("profile step must be positive");
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.tariff_buy < 0.0 || r.tariff_sell < 0.0) {
      throw InvalidArgument(fmt::format("row {}: negative tariff", i));
    }
    if (i > 0) {
      const double dt = r.timestamp - rows[i - 1].timestamp;
      if (std::abs(dt - step_hours) > 1e-9 * std::max(1.0, step_hours)) {
        throw GapError(fmt::format("row {}: step {} h differs from {} h", i, dt, step_hours));
      }
    }
  }
}

std::vector<ExogenousStep> ProfileTimeline::exogenous() const {
  std::vector<ExogenousStep> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(ExogenousStep{r.p_sum(), r.tariff_sell, r.tariff_buy, r.p_pcc_set});
  return out;
}

std::vector<double> ProfileTimeline::forecasts() const {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.p_sum_forecast.value_or(r.p_sum()));
  return out;
}

std::vector<std::size_t> ProfileTimeline::hours_of_day() const {
  std::vector<std::size_t> out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    const double h = std::fmod(std::floor(r.timestamp + 1e-9), 24.0);
    out.push_back(static_cast<std::size_t>(h < 0.0 ? h + 24.0 : h));
  }
  return out;
}

ProfileTimeline load_profiles(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot read profile {}", path.string()));
  std::string line;
  if (!std::getline(in, line)) throw SchemaError(fmt::format("{}: empty file", path.string()));
  const auto header = split_csv_line(line);
  const std::size_t required = std::size(kProfileColumns);
  bool with_forecast = header.size() == required + 1 && header.back() == "p_sum_forecast";
  bool ok = header.size() == required || with_forecast;
  for (std::size_t i = 0; ok && i < required; ++i) ok = header[i] == kProfileColumns[i];
  if (!ok) {
    throw SchemaError(fmt::format("{}: header '{}' does not match the profile schema", path.string(), line));
  }

  ProfileTimeline tl;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (boost::algorithm::trim_copy(line).empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw SchemaError(fmt::format("line {}: {} cells, expected {}", lineno, cells.size(), header.size()));
    }
    ProfileRow r;
    double* fields[] = {&r.timestamp, &r.p_pv, &r.p_ev, &r.p_other_load, &r.tariff_buy, &r.tariff_sell, &r.p_pcc_set};
    for (std::size_t i = 0; i < required; ++i) *fields[i] = parse_number(cells[i], lineno, header[i]);
    if (with_forecast) r.p_sum_forecast = parse_number(cells[required], lineno, header[required]);
    tl.rows.push_back(r);
  }
  if (tl.rows.empty()) throw SchemaError(fmt::format("{}: no data rows", path.string()));
  tl.step_hours = tl.rows.size() > 1 ? tl.rows[1].timestamp - tl.rows[0].timestamp : 1.0;
  if (!(tl.step_hours > 0.0)) throw GapError(fmt::format("{}: timestamps must increase", path.string()));
  tl.validate();
  return tl;
}

void write_profiles(const ProfileTimeline& timeline, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError(fmt::format("cannot write {}", path.string()));
  const bool with_forecast =
      std::all_of(timeline.rows.begin(), timeline.rows.end(), [](const auto& r) { return r.p_sum_forecast.has_value(); });
  for (std::size_t i = 0; i < std::size(kProfileColumns); ++i) out << (i ? "," : "") << kProfileColumns[i];
  out << (with_forecast ? ",p_sum_forecast\n" : "\n");
  for (const auto& r : timeline.rows) {
    out << fmt::format("{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}", r.timestamp, r.p_pv, r.p_ev,
                       r.p_other_load, r.tariff_buy, r.tariff_sell, r.p_pcc_set);
    if (with_forecast) out << fmt::format(",{:.17g}", *r.p_sum_forecast);
    out << '\n';
  }
}

Season parse_season(const std::string& name) {
  if (name == "spring") return Season::Spring;
  if (name == "summer") return Season::Summer;
  if (name == "autumn") return Season::Autumn;
  if (name == "winter") return Season::Winter;
  throw InvalidArgument(fmt::format("unknown season '{}'", name));
}

std::string to_string(Season s) {
  switch (s) {
    case Season::Spring: return "spring";
    case Season::Summer: return "summer";
    case Season::Autumn: return "autumn";
    case Season::Winter: return "winter";
  }
  return "?";
}

double tou_tariff(double hour_of_day) noexcept { return hour_of_day >= 8.0 && hour_of_day < 22.0 ? 1.02 : 0.51; }

namespace {

struct SeasonShape {
  double pv_scale;
  double sunrise;
  double sunset;
  double load_scale;
};

SeasonShape shape_of(Season s) {
  switch (s) {
    case Season::Spring: return {0.85, 6.0, 18.5, 0.90};
    case Season::Summer: return {1.00, 5.0, 19.5, 1.15};
    case Season::Autumn: return {0.75, 6.5, 17.5, 0.95};
    case Season::Winter: return {0.50, 7.0, 17.0, 1.10};
  }
  return {1.0, 6.0, 18.0, 1.0};
}

constexpr double kPvRating = 40.0 + 20.0;
constexpr double kPostKw = 7.0;
constexpr int kPosts = 5 + 10;

double ev_post_probability(int hour) {
  if (hour >= 17 && hour < 22) return 0.45;
  if (hour >= 9 && hour < 16) return 0.20;
  if (hour >= 22 || hour < 6) return 0.08;
  return 0.12;
}

double base_load(int hour) {
  if (hour < 6) return 22.0;
  if (hour < 9) return 38.0;
  if (hour < 17) return 32.0;
  if (hour < 22) return 52.0;
  return 30.0;
}

}  // namespace

ProfileTimeline synth_profiles(Season season, int days, std::uint64_t seed) {
  if (days < 1) throw InvalidArgument("synth_profiles: days must be >= 1");
  const SeasonShape sh = shape_of(season);
  ProfileTimeline tl;
  tl.step_hours = 1.0;
  for (int d = 0; d < days; ++d) {
    RngStream day_rng(seed, {static_cast<std::uint64_t>(d)});
    const double clearness = 0.65 + 0.35 * day_rng.uniform();
    for (int h = 0; h < 24; ++h) {
      RngStream rng(seed, {static_cast<std::uint64_t>(d), static_cast<std::uint64_t>(h) + 1});
      const double mid = h + 0.5;
      double bell = 0.0;
      if (mid > sh.sunrise && mid < sh.sunset) {
        bell = std::pow(std::sin(std::numbers::pi * (mid - sh.sunrise) / (sh.sunset - sh.sunrise)), 1.5);
      }
      const double pv_exp = kPvRating * sh.pv_scale * bell * 0.825;  // mean clearness
      double pv = kPvRating * sh.pv_scale * bell * clearness * (1.0 + 0.08 * rng.normal());
      pv = std::clamp(pv, 0.0, kPvRating);

      const double p = ev_post_probability(h);
      int busy = 0;
      for (int k = 0; k < kPosts; ++k) busy += rng.uniform() < p ? 1 : 0;
      const double ev_exp = kPostKw * kPosts * p;
      const double ev = kPostKw * busy;

      const double load_exp = base_load(h) * sh.load_scale;
      const double load = std::max(0.0, load_exp * (1.0 + 0.06 * rng.normal()));

      ProfileRow r;
      r.timestamp = static_cast<double>(d * 24 + h);
      r.p_pv = pv;
      r.p_ev = ev;
      r.p_other_load = load;
      r.tariff_buy = tou_tariff(h);
      r.tariff_sell = tou_tariff(h);
      r.p_pcc_set = 50.0;
      r.p_sum_forecast = pv_exp - ev_exp - load_exp;
      tl.rows.push_back(r);
    }
  }
  return tl;
}

ErrorHistory load_error_history(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot read error history {}", path.string()));
  std::string line;
  if (!std::getline(in, line) || split_csv_line(line) != std::vector<std::string>{"hour_of_day", "error_kw"}) {
    throw SchemaError(fmt::format("{}: header must be 'hour_of_day,error_kw'", path.string()));
  }
  ErrorHistory h;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (boost::algorithm::trim_copy(line).empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != 2) throw SchemaError(fmt::format("line {}: expected 2 cells", lineno));
    const double hour = parse_number(cells[0], lineno, "hour_of_day");
    if (hour < 0.0 || hour > 23.0 || hour != std::floor(hour)) {
      throw SchemaError(fmt::format("line {}: hour_of_day must be an integer in 0..23", lineno));
    }
    h.by_hour[static_cast<std::size_t>(hour)].push_back(parse_number(cells[1], lineno, "error_kw"));
  }
  return h;
}

void write_error_history(const ErrorHistory& history, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError(fmt::format("cannot write {}", path.string()));
  out << "hour_of_day,error_kw\n";
  for (std::size_t h = 0; h < history.by_hour.size(); ++h) {
    for (double e : history.by_hour[h]) out << fmt::format("{},{:.17g}\n", h, e);
  }
}

ErrorHistory error_history_of(const ProfileTimeline& timeline) {
  ErrorHistory h;
  const auto hours = timeline.hours_of_day();
  const auto fc = timeline.forecasts();
  for (std::size_t i = 0; i < timeline.size(); ++i) {
    h.by_hour[hours[i]].push_back(timeline.rows[i].p_sum() - fc[i]);
  }
  return h;
}

TrainingTimeline make_training_timeline(const ProfileTimeline& profile, const ErrorHistory& history,
                                        double initial_soc, double confidence_level) {
  profile.validate();
  TrainingTimeline tl;
  tl.realized = profile.exogenous();
  tl.forecast = profile.forecasts();
  tl.error_buckets = history.by_hour;
  tl.bucket_of = profile.hours_of_day();
  tl.initial_soc = initial_soc;
  tl.confidence_level = confidence_level;
  tl.validate();
  return tl;
}

}  // namespace bessd
