#include "rted/network.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <queue>
#include <regex>
#include <sstream>

using nlohmann::json;

namespace rted {

NetworkModel::NetworkModel(std::string name, std::vector<Bus> buses, std::vector<Line> lines, int slack_bus,
                           std::string notes)
    : name_(std::move(name)), buses_(std::move(buses)), lines_(std::move(lines)), slack_(slack_bus), notes_(std::move(notes)) {
  if (buses_.empty()) throw Error(ErrorKind::Topology, "network has no buses");
  std::map<int, Eigen::Index> seen;
  for (std::size_t b = 0; b < buses_.size(); ++b)
    if (!seen.emplace(buses_[b].id, static_cast<Eigen::Index>(b)).second)
      throw Error(ErrorKind::Topology, "duplicate bus id " + std::to_string(buses_[b].id));
  if (!seen.count(slack_)) throw Error(ErrorKind::Topology, "slack bus " + std::to_string(slack_) + " not in bus list");

  std::vector<std::pair<Eigen::Index, Eigen::Index>> ends;
  Eigen::VectorXd x(static_cast<Eigen::Index>(lines_.size()));
  std::vector<std::vector<Eigen::Index>> adj(buses_.size());
  for (std::size_t l = 0; l < lines_.size(); ++l) {
    auto& ln = lines_[l];
    if (!seen.count(ln.from) || !seen.count(ln.to))
      throw Error(ErrorKind::Topology, "line " + std::to_string(l) + " references an unknown bus");
    if (ln.from == ln.to) throw Error(ErrorKind::Topology, "line " + std::to_string(l) + " is a self loop");
    if (!(ln.reactance > 0.0) || !std::isfinite(ln.reactance))
      throw Error(ErrorKind::Topology, "line " + std::to_string(l) + " has non-positive reactance");
    if (ln.name.empty()) ln.name = std::to_string(ln.from) + "-" + std::to_string(ln.to);
    const auto f = seen[ln.from], t = seen[ln.to];
    ends.emplace_back(f, t);
    adj[static_cast<std::size_t>(f)].push_back(t);
    adj[static_cast<std::size_t>(t)].push_back(f);
    x(static_cast<Eigen::Index>(l)) = ln.reactance;
  }

  std::vector<bool> reached(buses_.size(), false);
  std::queue<Eigen::Index> q;
  q.push(seen[slack_]);
  reached[static_cast<std::size_t>(seen[slack_])] = true;
  std::size_t count = 1;
  while (!q.empty()) {
    const auto b = q.front();
    q.pop();
    for (auto nb : adj[static_cast<std::size_t>(b)])
      if (!reached[static_cast<std::size_t>(nb)]) {
        reached[static_cast<std::size_t>(nb)] = true;
        ++count;
        q.push(nb);
      }
  }
  if (count != buses_.size()) {
    for (std::size_t b = 0; b < buses_.size(); ++b)
      if (!reached[b])
        throw Error(ErrorKind::Topology, "network is disconnected: bus " + std::to_string(buses_[b].id) +
                                             " is not reachable from the slack");
  }
  ptdf_ = compute_ptdf<double>(bus_count(), ends, x, seen[slack_]);
}

Eigen::Index NetworkModel::bus_index(int id) const {
  for (std::size_t b = 0; b < buses_.size(); ++b)
    if (buses_[b].id == id) return static_cast<Eigen::Index>(b);
  throw Error(ErrorKind::Topology, "bus " + std::to_string(id) + " is not in network '" + name_ + "'");
}

bool NetworkModel::has_bus(int id) const {
  return std::any_of(buses_.begin(), buses_.end(), [&](const Bus& b) { return b.id == id; });
}

Eigen::VectorXd NetworkModel::load_shares() const {
  Eigen::VectorXd s(bus_count());
  for (Eigen::Index b = 0; b < bus_count(); ++b) s(b) = buses_[static_cast<std::size_t>(b)].load_share;
  return s;
}

std::vector<Eigen::Index> NetworkModel::monitored_lines() const {
  std::vector<Eigen::Index> out;
  for (std::size_t l = 0; l < lines_.size(); ++l)
    if (lines_[l].monitored()) out.push_back(static_cast<Eigen::Index>(l));
  return out;
}

Eigen::MatrixXd compute_ptdf(const NetworkModel& net) { return net.ptdf(); }

Eigen::VectorXd line_flow(const NetworkModel& net, const Eigen::VectorXd& injections) {
  if (injections.size() != net.bus_count())
    throw Error(ErrorKind::Domain, "injection vector has " + std::to_string(injections.size()) + " entries for " +
                                       std::to_string(net.bus_count()) + " buses");
  return net.ptdf() * injections;
}

Eigen::MatrixXd plant_shift_factors(const NetworkModel& net, const std::vector<PlantId>& plants) {
  check_plant_buses(net, plants);
  Eigen::MatrixXd k(net.line_count(), static_cast<Eigen::Index>(plants.size()));
  for (std::size_t j = 0; j < plants.size(); ++j) k.col(static_cast<Eigen::Index>(j)) = net.ptdf().col(net.bus_index(plants[j].bus));
  return k;
}

void check_plant_buses(const NetworkModel& net, const std::vector<PlantId>& plants) {
  for (const auto& p : plants)
    if (!net.has_bus(p.bus))
      throw Error(ErrorKind::Topology, "plant " + p.name + " sits on bus " + std::to_string(p.bus) +
                                           ", which is not in network '" + net.name() + "'");
}

void to_json(json& j, const NetworkModel& net) {
  json buses = json::array(), lines = json::array();
  for (const auto& b : net.buses()) buses.push_back({{"id", b.id}, {"load_share", b.load_share}});
  for (const auto& l : net.lines()) {
    json e = {{"name", l.name}, {"from", l.from}, {"to", l.to}, {"x", l.reactance}};
    if (l.monitored())
      e["limit_mw"] = l.limit_mw;
    else
      e["limit_mw"] = nullptr;
    lines.push_back(e);
  }
  j = {{"name", net.name()}, {"slack", net.slack_bus()}, {"buses", buses}, {"lines", lines}};
  if (!net.notes().empty()) j["notes"] = net.notes();
}

NetworkModel network_from_json(const json& j) {
  try {
    std::vector<Bus> buses;
    for (const auto& b : j.at("buses")) buses.push_back({b.at("id").get<int>(), b.value("load_share", 0.0)});
    std::vector<Line> lines;
    for (const auto& l : j.at("lines")) {
      Line ln;
      ln.from = l.at("from").get<int>();
      ln.to = l.at("to").get<int>();
      ln.reactance = l.at("x").get<double>();
      ln.limit_mw = l.contains("limit_mw") && !l.at("limit_mw").is_null() ? l.at("limit_mw").get<double>() : 0.0;
      ln.name = l.value("name", std::string());
      lines.push_back(ln);
    }
    std::string notes;
    if (j.contains("notes")) notes = j.at("notes").is_string() ? j.at("notes").get<std::string>() : j.at("notes").dump();
    return NetworkModel(j.value("name", std::string("network")), std::move(buses), std::move(lines),
                        j.at("slack").get<int>(), std::move(notes));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Schema, std::string("network file: ") + e.what());
  }
}

NetworkModel load_network(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Config, "cannot open network file " + path.string());
  if (path.extension() == ".m") return import_matpower(path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Format, path.string() + ": " + e.what());
  }
  return network_from_json(j);
}

namespace {

std::vector<std::vector<double>> matpower_matrix(const std::string& text, const std::string& field) {
  const std::regex start("mpc\\." + field + "\\s*=\\s*\\[");
  std::smatch m;
  if (!std::regex_search(text, m, start)) throw Error(ErrorKind::Schema, "MATPOWER case lacks mpc." + field);
  const auto begin = static_cast<std::size_t>(m.position(0) + m.length(0));
  const auto end = text.find(']', begin);
  if (end == std::string::npos) throw Error(ErrorKind::Format, "unterminated mpc." + field);
  std::vector<std::vector<double>> rows;
  // Rows end at ';' or a newline; '%' starts a comment.
  std::istringstream body(text.substr(begin, end - begin));
  for (std::string line; std::getline(body, line);) {
    line = line.substr(0, line.find('%'));
    std::istringstream chunks(line);
    for (std::string chunk; std::getline(chunks, chunk, ';');) {
      std::istringstream vals(chunk);
      std::vector<double> row;
      for (double v; vals >> v;) row.push_back(v);
      if (!row.empty()) rows.push_back(std::move(row));
    }
  }
  return rows;
}

}  // namespace

NetworkModel parse_matpower(const std::string& text, const std::string& name) {
  const auto bus_rows = matpower_matrix(text, "bus");
  const auto branch_rows = matpower_matrix(text, "branch");
  std::vector<Bus> buses;
  int slack = -1;
  double total_pd = 0.0;
  for (const auto& r : bus_rows) {
    if (r.size() < 3) throw Error(ErrorKind::Format, "mpc.bus rows need at least 3 columns");
    buses.push_back({static_cast<int>(r[0]), std::max(0.0, r[2])});
    total_pd += std::max(0.0, r[2]);
    if (static_cast<int>(r[1]) == 3) slack = static_cast<int>(r[0]);
  }
  if (slack < 0) throw Error(ErrorKind::Topology, "MATPOWER case has no reference (type 3) bus");
  if (total_pd > 0.0)
    for (auto& b : buses) b.load_share /= total_pd;
  std::vector<Line> lines;
  for (const auto& r : branch_rows) {
    if (r.size() < 4) throw Error(ErrorKind::Format, "mpc.branch rows need at least 4 columns");
    if (r.size() > 10 && r[10] == 0.0) continue;
    Line l;
    l.from = static_cast<int>(r[0]);
    l.to = static_cast<int>(r[1]);
    l.reactance = r[3];
    l.limit_mw = r.size() > 5 ? r[5] : 0.0;
    lines.push_back(l);
  }
  return NetworkModel(name, std::move(buses), std::move(lines), slack);
}

NetworkModel import_matpower(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Config, "cannot open MATPOWER case " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_matpower(ss.str(), path.stem().string());
}

}  // namespace rted
