#pragma once

#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace sgl {

enum class BusType { kSlack, kPV, kPQ };

struct Bus {
  int id = 0;
  BusType type = BusType::kPQ;
};

struct Branch {
  int from_bus = 0;
  int to_bus = 0;
  double reactance_pu = 0.0;
  double tap_ratio = 1.0;
  bool in_service = true;
};

/// Bus and branch tables of a power network, as read from a MATPOWER case.
///
/// A GridCase returned by parse_case() always has exactly one slack bus,
/// unique bus ids, branch endpoints that reference existing buses and
/// positive reactance on every in-service branch. Out-of-service branches
/// are kept so that row counts of the source file can be checked.
struct GridCase {
  double base_mva = 100.0;
  std::vector<Bus> buses;
  std::vector<Branch> branches;

  std::size_t in_service_branch_count() const;
  /// Position of the slack bus in `buses`.
  std::size_t slack_position() const;
};

struct Injection {
  int bus = 0;
  bool operator==(const Injection&) const = default;
};

struct Flow {
  int from_bus = 0;
  int to_bus = 0;
  bool operator==(const Flow&) const = default;
};

using MeasurementLabel = std::variant<Injection, Flow>;

std::string to_string(const MeasurementLabel& label);

/// Linear DC observation model y = H x + z with z ~ N(0, noise_variance I).
///
/// Rows are the injections at every bus (bus order) followed by the flow on
/// every in-service branch (branch order). Columns are the voltage angles of
/// the non-slack buses.
struct MeasurementModel {
  Eigen::MatrixXd jacobian;
  double noise_variance = 1.0;
  std::vector<MeasurementLabel> labels;
  std::vector<int> state_labels;

  Eigen::Index sensors() const { return jacobian.rows(); }
  Eigen::Index states() const { return jacobian.cols(); }
};

/// Parses the `baseMVA`, `bus` and `branch` blocks of a MATPOWER case file.
/// Throws ParseError on malformed text, ModelError on invalid network data.
GridCase parse_case(std::string_view text);

/// Reads and parses a case file from disk. Throws std::runtime_error if the
/// file cannot be opened.
GridCase load_case(const std::string& path);

/// Builds the DC Jacobian (unit voltage magnitudes, lossless branches).
/// Throws ModelError if the in-service network is disconnected.
MeasurementModel build_jacobian(const GridCase& grid, double noise_variance);

}  // namespace sgl
