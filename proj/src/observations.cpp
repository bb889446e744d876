#include "cfd/observations.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

namespace cfd {

void validate(const ObservationSet& obs) {
  require(obs.times.size() >= 3, "observations: need at least 2 transitions");
  require(obs.values.rows() == obs.times.size(), "observations: one row of values per time");
  require(obs.values.cols() >= 1, "observations: no value columns");
  require(obs.times.allFinite() && obs.values.allFinite(), "observations: non-finite entry");
  const double dt = obs.step();
  require(dt > 0, "observations: times must increase");
  for (Eigen::Index k = 1; k < obs.times.size(); ++k) {
    const double gap = obs.times[k] - obs.times[k - 1];
    require(std::abs(gap - dt) <= 1e-9 * dt + 1e-12 * std::abs(obs.times[k]),
            "observations: spacing is not constant at row " + std::to_string(k));
  }
  if (obs.mode == ObservationMode::noisy_first_coordinate)
    require(obs.noise_sd > 0 && std::isfinite(obs.noise_sd), "observations: noise_sd must be positive");
}

ObservationSet read_observations_csv(std::istream& is, ObservationMode mode, double noise_sd) {
  std::string line;
  require(static_cast<bool>(std::getline(is, line)), "observations csv: empty input");
  require(line.rfind("t,", 0) == 0, "observations csv: header must start with 't,'");
  std::vector<std::vector<double>> rows;
  while (std::getline(is, line)) {
    if (line.empty() || line == "\r") continue;
    std::vector<double> r;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      try {
        std::size_t used = 0;
        r.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        throw InputError("observations csv: bad number '" + cell + "'");
      }
    }
    require(r.size() >= 2, "observations csv: row needs t and at least one value");
    require(rows.empty() || r.size() == rows.front().size(), "observations csv: ragged rows");
    rows.push_back(std::move(r));
  }
  require(!rows.empty(), "observations csv: no data rows");
  ObservationSet obs;
  obs.mode = mode;
  obs.noise_sd = noise_sd;
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto cols = static_cast<Eigen::Index>(rows.front().size()) - 1;
  obs.times.resize(n);
  obs.values.resize(n, cols);
  for (Eigen::Index k = 0; k < n; ++k) {
    obs.times[k] = rows[k][0];
    for (Eigen::Index j = 0; j < cols; ++j) obs.values(k, j) = rows[k][j + 1];
  }
  validate(obs);
  return obs;
}

ObservationSet read_observations_csv(const std::string& path, ObservationMode mode, double noise_sd) {
  std::ifstream is(path);
  if (!is) throw InputError("cannot open observations file " + path);
  return read_observations_csv(is, mode, noise_sd);
}

void write_observations_csv(std::ostream& os, const ObservationSet& obs) {
  os << "t";
  for (Eigen::Index j = 0; j < obs.values.cols(); ++j) os << ",y" << (j + 1);
  os << "\n";
  char buf[32];
  for (Eigen::Index k = 0; k < obs.times.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%.17g", obs.times[k]);
    os << buf;
    for (Eigen::Index j = 0; j < obs.values.cols(); ++j) {
      std::snprintf(buf, sizeof buf, ",%.17g", obs.values(k, j));
      os << buf;
    }
    os << "\n";
  }
}

ObservationSet make_observations(const Mat& values, double dt, ObservationMode mode, double noise_sd) {
  ObservationSet obs;
  obs.values = values;
  obs.times.resize(values.rows());
  for (Eigen::Index k = 0; k < values.rows(); ++k) obs.times[k] = dt * static_cast<double>(k);
  obs.mode = mode;
  obs.noise_sd = noise_sd;
  validate(obs);
  return obs;
}

}  // namespace cfd
