#include "rrm/channel.hpp"

#include <cmath>
#include <stdexcept>

#include "rrm/units.hpp"

namespace rrm {

void ChannelParams::validate() const {
  if (!(shadow_std_db >= 0.0) || !std::isfinite(shadow_std_db)) {
    throw std::invalid_argument("shadow_std_db must be finite and >= 0");
  }
  if (!std::isfinite(tx_power_dbm) || !std::isfinite(noise_power_dbm) ||
      !std::isfinite(pl_ref_db)) {
    throw std::invalid_argument("channel powers must be finite");
  }
}

double path_loss_db(double distance_m, double pl_ref_db) {
  if (!(distance_m > 0.0)) {
    throw std::domain_error("path_loss_db: distance must be positive");
  }
  return 15.3 + 37.6 * std::log10(distance_m) + pl_ref_db;
}

double sample_rayleigh_power(Rng& rng) {
  std::exponential_distribution<double> fading(1.0);
  double f = fading(rng);
  // exponential_distribution may return exactly 0 with vanishing probability
  while (f <= 0.0) f = fading(rng);
  return f;
}

double sample_shadowing_db(double shadow_std_db, Rng& rng) {
  if (shadow_std_db == 0.0) return 0.0;
  std::normal_distribution<double> shadow(0.0, shadow_std_db);
  return shadow(rng);
}

double compose_gain(double distance_m, double shadowing_db, double fading_power,
                    double pl_ref_db) {
  const double loss_db = path_loss_db(distance_m, pl_ref_db) + shadowing_db;
  return db_to_linear(-loss_db) * fading_power;
}

double sample_channel_gain(double distance_m, const ChannelParams& params, Rng& rng) {
  const double x_db = sample_shadowing_db(params.shadow_std_db, rng);
  const double f = sample_rayleigh_power(rng);
  return compose_gain(distance_m, x_db, f, params.pl_ref_db);
}

double sinr_linear(std::span<const double> gains_row, int serving_ap,
                   const std::vector<bool>& active_aps, const ChannelParams& params) {
  if (serving_ap < 0 || static_cast<std::size_t>(serving_ap) >= gains_row.size() ||
      active_aps.size() != gains_row.size() || !active_aps[serving_ap]) {
    throw std::logic_error("sinr_linear: serving AP must be an active AP");
  }
  const double pt = dbm_to_mw(params.tx_power_dbm);
  const double noise = dbm_to_mw(params.noise_power_dbm);
  double interference = 0.0;
  for (std::size_t i = 0; i < gains_row.size(); ++i) {
    if (static_cast<int>(i) != serving_ap && active_aps[i]) {
      interference += gains_row[i] * pt;
    }
  }
  return gains_row[serving_ap] * pt / (interference + noise);
}

double instantaneous_rate(double sinr) {
  if (!(sinr >= 0.0)) throw std::domain_error("instantaneous_rate: negative sinr");
  return std::log2(1.0 + sinr);
}

}  // namespace rrm
