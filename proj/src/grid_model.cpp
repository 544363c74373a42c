#include "stealth_grid/grid_model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>
#include <unordered_map>

#include "stealth_grid/errors.hpp"

namespace sgl {

namespace {

struct Row {
  std::size_t line = 0;
  std::vector<double> values;
};

struct Block {
  std::size_t line = 0;
  std::vector<Row> rows;
};

struct RawCase {
  std::optional<double> base_mva;
  std::optional<Block> bus;
  std::optional<Block> branch;
};

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_number(std::string_view token, std::size_t line) {
  // from_chars rejects a leading '+', MATLAB does not.
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size() || !std::isfinite(value)) {
    throw ParseError(line, "invalid numeric token '" + std::string(token) + "'");
  }
  return value;
}

// Splits `mpc.bus = [` style assignments. Returns the field name (text after
// the last '.' on the left of '=') and the right-hand side.
std::optional<std::pair<std::string, std::string_view>> split_assignment(std::string_view line) {
  const auto eq = line.find('=');
  if (eq == std::string_view::npos) return std::nullopt;
  auto lhs = trim(line.substr(0, eq));
  if (lhs.starts_with("function")) return std::nullopt;
  const auto dot = lhs.rfind('.');
  if (dot != std::string_view::npos) lhs = lhs.substr(dot + 1);
  return std::make_pair(std::string(lhs), trim(line.substr(eq + 1)));
}

class CaseReader {
 public:
  RawCase read(std::string_view text) {
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      const auto end = std::min(text.find('\n', pos), text.size());
      ++line_no;
      auto line = text.substr(pos, end - pos);
      if (const auto pct = line.find('%'); pct != std::string_view::npos) line = line.substr(0, pct);
      consume(trim(line), line_no);
      if (end == text.size()) break;
      pos = end + 1;
    }
    if (active_) throw ParseError(line_no, "unterminated matrix block '" + active_name_ + "'");
    return std::move(raw_);
  }

 private:
  void consume(std::string_view line, std::size_t line_no) {
    if (line.empty()) return;
    if (!active_) {
      const auto assignment = split_assignment(line);
      if (!assignment) return;
      const auto& [name, rhs] = *assignment;
      if (!rhs.empty() && (rhs.front() == '[' || rhs.front() == '{')) {
        active_ = true;
        active_name_ = name;
        keep_ = name == "bus" || name == "branch";
        skip_until_ = rhs.front() == '[' ? ']' : '}';
        current_ = Block{line_no, {}};
        consume_block(rhs.substr(1), line_no);
      } else if (name == "baseMVA") {
        auto value = rhs;
        if (!value.empty() && value.back() == ';') value.remove_suffix(1);
        raw_.base_mva = parse_number(trim(value), line_no);
      }
      return;
    }
    consume_block(line, line_no);
  }

  void consume_block(std::string_view body, std::size_t line_no) {
    std::size_t i = 0;
    while (i < body.size()) {
      const char c = body[i];
      if (c == skip_until_) {
        finish_row(line_no);
        finish_block();
        // Anything after the closing bracket (typically ';') is ignored.
        return;
      }
      if (c == ';') {
        finish_row(line_no);
        ++i;
        continue;
      }
      if (c == ' ' || c == '\t' || c == ',' || c == '\r') {
        ++i;
        continue;
      }
      auto j = i;
      while (j < body.size() && body[j] != ' ' && body[j] != '\t' && body[j] != ',' &&
             body[j] != ';' && body[j] != '\r' && body[j] != skip_until_) {
        ++j;
      }
      if (keep_) row_.values.push_back(parse_number(body.substr(i, j - i), line_no));
      row_.line = line_no;
      i = j;
    }
    // A newline also terminates a matrix row.
    finish_row(line_no);
  }

  void finish_row(std::size_t line_no) {
    if (!row_.values.empty()) {
      if (row_.line == 0) row_.line = line_no;
      current_.rows.push_back(std::move(row_));
    }
    row_ = Row{};
  }

  void finish_block() {
    if (active_name_ == "bus") raw_.bus = std::move(current_);
    if (active_name_ == "branch") raw_.branch = std::move(current_);
    active_ = false;
    keep_ = false;
    current_ = Block{};
  }

  RawCase raw_;
  bool active_ = false;
  bool keep_ = false;
  char skip_until_ = ']';
  std::string active_name_;
  Block current_;
  Row row_;
};

int as_bus_id(double value, std::size_t line) {
  if (value != std::floor(value) || value < 1) {
    throw ParseError(line, "bus id must be a positive integer");
  }
  return static_cast<int>(value);
}

void require_columns(const Row& row, std::size_t count, const char* block) {
  if (row.values.size() < count) {
    throw ParseError(row.line, std::string(block) + " row has " + std::to_string(row.values.size()) +
                                   " columns, expected at least " + std::to_string(count));
  }
}

}  // namespace

std::size_t GridCase::in_service_branch_count() const {
  return static_cast<std::size_t>(
      std::count_if(branches.begin(), branches.end(), [](const Branch& b) { return b.in_service; }));
}

std::size_t GridCase::slack_position() const {
  const auto it = std::find_if(buses.begin(), buses.end(),
                               [](const Bus& b) { return b.type == BusType::kSlack; });
  if (it == buses.end()) throw ModelError("case has no slack bus");
  return static_cast<std::size_t>(it - buses.begin());
}

std::string to_string(const MeasurementLabel& label) {
  if (const auto* inj = std::get_if<Injection>(&label)) {
    return "P" + std::to_string(inj->bus);
  }
  const auto& flow = std::get<Flow>(label);
  return "P" + std::to_string(flow.from_bus) + "-" + std::to_string(flow.to_bus);
}

GridCase parse_case(std::string_view text) {
  const auto raw = CaseReader{}.read(text);
  const auto last_line = static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')) + 1;
  if (!raw.bus) throw ParseError(last_line, "missing 'bus' matrix block");
  if (!raw.branch) throw ParseError(last_line, "missing 'branch' matrix block");

  GridCase grid;
  if (raw.base_mva) {
    if (*raw.base_mva <= 0) throw ModelError("baseMVA must be positive");
    grid.base_mva = *raw.base_mva;
  }

  std::unordered_map<int, std::size_t> bus_index;
  std::size_t slack_count = 0;
  for (const auto& row : raw.bus->rows) {
    require_columns(row, 2, "bus");
    Bus bus;
    bus.id = as_bus_id(row.values[0], row.line);
    switch (static_cast<int>(row.values[1])) {
      case 1: bus.type = BusType::kPQ; break;
      case 2: bus.type = BusType::kPV; break;
      case 3: bus.type = BusType::kSlack; ++slack_count; break;
      case 4: throw ModelError("bus " + std::to_string(bus.id) + " is isolated (type 4), not supported");
      default: throw ParseError(row.line, "unknown bus type");
    }
    if (!bus_index.emplace(bus.id, grid.buses.size()).second) {
      throw ModelError("duplicate bus id " + std::to_string(bus.id));
    }
    grid.buses.push_back(bus);
  }
  if (slack_count != 1) {
    throw ModelError("case must have exactly one slack bus, found " + std::to_string(slack_count));
  }

  for (const auto& row : raw.branch->rows) {
    require_columns(row, 11, "branch");
    Branch br;
    br.from_bus = as_bus_id(row.values[0], row.line);
    br.to_bus = as_bus_id(row.values[1], row.line);
    br.reactance_pu = row.values[3];
    br.tap_ratio = row.values[8] == 0.0 ? 1.0 : row.values[8];
    br.in_service = row.values[10] != 0.0;
    const double shift_deg = row.values[9];

    const auto where = " (branch " + std::to_string(br.from_bus) + "-" + std::to_string(br.to_bus) +
                       ", line " + std::to_string(row.line) + ")";
    if (!bus_index.contains(br.from_bus) || !bus_index.contains(br.to_bus)) {
      throw ModelError("branch references unknown bus" + where);
    }
    if (br.in_service) {
      if (br.from_bus == br.to_bus) throw ModelError("branch connects a bus to itself" + where);
      if (br.reactance_pu <= 0) throw ModelError("non-positive reactance on in-service branch" + where);
      if (br.tap_ratio < 0) throw ModelError("negative tap ratio" + where);
      if (shift_deg != 0.0) throw ModelError("phase-shifting transformers are not supported" + where);
    }
    grid.branches.push_back(br);
  }
  return grid;
}

GridCase load_case(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open case file '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_case(buffer.str());
}

MeasurementModel build_jacobian(const GridCase& grid, double noise_variance) {
  if (!(noise_variance > 0)) throw DomainError("noise variance must be positive");

  const auto nbus = grid.buses.size();
  const auto slack = grid.slack_position();
  std::unordered_map<int, std::size_t> position;
  for (std::size_t i = 0; i < nbus; ++i) position.emplace(grid.buses[i].id, i);

  // Connectivity over in-service branches (union-find).
  std::vector<std::size_t> parent(nbus);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t v) {
    while (parent[v] != v) v = parent[v] = parent[parent[v]];
    return v;
  };
  for (const auto& br : grid.branches) {
    if (br.in_service) parent[find(position.at(br.from_bus))] = find(position.at(br.to_bus));
  }
  for (std::size_t i = 0; i < nbus; ++i) {
    if (find(i) != find(slack)) {
      throw ModelError("network is disconnected: bus " + std::to_string(grid.buses[i].id) +
                       " is not reachable from the slack bus");
    }
  }

  // Column of each bus angle; -1 for the slack reference.
  std::vector<Eigen::Index> column(nbus, -1);
  MeasurementModel meas;
  meas.noise_variance = noise_variance;
  for (std::size_t i = 0, c = 0; i < nbus; ++i) {
    if (i == slack) continue;
    column[i] = static_cast<Eigen::Index>(c++);
    meas.state_labels.push_back(grid.buses[i].id);
  }

  const auto nflow = grid.in_service_branch_count();
  const auto m = static_cast<Eigen::Index>(nbus + nflow);
  const auto n = static_cast<Eigen::Index>(nbus - 1);
  meas.jacobian = Eigen::MatrixXd::Zero(m, n);

  for (const auto& bus : grid.buses) meas.labels.emplace_back(Injection{bus.id});

  Eigen::Index row = static_cast<Eigen::Index>(nbus);
  for (const auto& br : grid.branches) {
    if (!br.in_service) continue;
    const auto f = position.at(br.from_bus);
    const auto t = position.at(br.to_bus);
    const double b = 1.0 / (br.reactance_pu * br.tap_ratio);
    if (column[f] >= 0) meas.jacobian(row, column[f]) += b;
    if (column[t] >= 0) meas.jacobian(row, column[t]) -= b;
    // Flow leaves f and enters t.
    meas.jacobian.row(static_cast<Eigen::Index>(f)) += meas.jacobian.row(row);
    meas.jacobian.row(static_cast<Eigen::Index>(t)) -= meas.jacobian.row(row);
    meas.labels.emplace_back(Flow{br.from_bus, br.to_bus});
    ++row;
  }
  return meas;
}

}  // namespace sgl
