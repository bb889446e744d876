#pragma once

#include "cfd/core.hpp"

#include <iosfwd>
#include <string>

namespace cfd {

enum class ObservationMode { full_state, noisy_first_coordinate };

// Equally spaced observations; values has one row per time.
struct ObservationSet {
  Vec times;
  Mat values;
  ObservationMode mode = ObservationMode::full_state;
  double noise_sd = 0.0;  // noisy_first_coordinate only

  Eigen::Index n_transitions() const { return times.size() - 1; }
  double step() const { return times[1] - times[0]; }
};

// >= 3 rows, strictly increasing times with constant spacing (1e-9 relative),
// finite values, positive noise_sd in noisy mode.
void validate(const ObservationSet& obs);

// "t,y1[,y2,...]" with a header row.
ObservationSet read_observations_csv(std::istream& is, ObservationMode mode = ObservationMode::full_state,
                                     double noise_sd = 0.0);
ObservationSet read_observations_csv(const std::string& path, ObservationMode mode = ObservationMode::full_state,
                                     double noise_sd = 0.0);
void write_observations_csv(std::ostream& os, const ObservationSet& obs);

ObservationSet make_observations(const Mat& values, double dt, ObservationMode mode = ObservationMode::full_state,
                                 double noise_sd = 0.0);

}  // namespace cfd
