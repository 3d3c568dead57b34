#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace rrm {

using Rng = std::mt19937_64;

/// Large- and small-scale propagation parameters shared by every AP-UE link.
struct ChannelParams {
  double pl_ref_db = 10.0;        // PL_o
  double shadow_std_db = 8.0;     // log-normal shadowing sigma
  double tx_power_dbm = 10.0;     // p_t
  double noise_power_dbm = -104.0;

  /// Throws std::invalid_argument when an invariant is broken.
  void validate() const;
};

/// Per-slot M x N matrix of linear power gains |h_mn|^2.
struct ChannelGainMatrix {
  Eigen::MatrixXd gains;  // rows: UEs, cols: APs
  int slot_index = 0;

  [[nodiscard]] int num_ues() const { return static_cast<int>(gains.rows()); }
  [[nodiscard]] int num_aps() const { return static_cast<int>(gains.cols()); }
};

/// Indoor path loss 15.3 + 37.6 log10(d) + PL_o in dB.
double path_loss_db(double distance_m, double pl_ref_db);

/// Unit-mean exponential power fading sample (|h|^2 of a unit-variance
/// complex Gaussian).
double sample_rayleigh_power(Rng& rng);

/// Log-normal shadowing sample in dB.
double sample_shadowing_db(double shadow_std_db, Rng& rng);

/// Combines path loss, shadowing (dB) and fading power into a linear gain.
double compose_gain(double distance_m, double shadowing_db, double fading_power,
                    double pl_ref_db);

/// One full draw: fresh shadowing and fresh fading.
double sample_channel_gain(double distance_m, const ChannelParams& params, Rng& rng);

/// SINR of a UE served by `serving_ap` with `active_aps` transmitting.
/// `active_aps[i]` is true when AP i transmits in this slot. The serving AP
/// must be active.
double sinr_linear(std::span<const double> gains_row, int serving_ap,
                   const std::vector<bool>& active_aps, const ChannelParams& params);

/// Shannon rate log2(1 + sinr) in bits/s/Hz.
double instantaneous_rate(double sinr);

}  // namespace rrm
