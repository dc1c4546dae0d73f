#include "ncgwc/types.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <sstream>

namespace ncgwc {

using nlohmann::json;

std::string triplet_set_to_json(const TripletSet& set, const ClassParams& params) {
  json j;
  j["mu"] = params.mu;
  j["L"] = params.L;
  j["labels"] = set.labels;
  json points = json::array(), grads = json::array(), values = json::array();
  for (const auto& t : set.items) {
    points.push_back(std::vector<double>(t.x.data(), t.x.data() + t.x.size()));
    grads.push_back(std::vector<double>(t.g.data(), t.g.data() + t.g.size()));
    values.push_back(t.f);
  }
  j["points"] = std::move(points);
  j["gradients"] = std::move(grads);
  j["values"] = std::move(values);
  return j.dump(1);
}

TripletSetFile triplet_set_from_json(const std::string& json_text) {
  const json j = json::parse(json_text);
  ClassParams params(j.at("mu").get<double>(), j.at("L").get<double>());
  const auto labels = j.at("labels").get<std::vector<std::string>>();
  const auto& points = j.at("points");
  const auto& grads = j.at("gradients");
  const auto& values = j.at("values");
  if (labels.size() != points.size() || labels.size() != grads.size() ||
      labels.size() != values.size()) {
    throw std::invalid_argument("triplet set JSON: array lengths differ");
  }
  TripletSet set;
  for (size_t i = 0; i < labels.size(); ++i) {
    const auto px = points[i].get<std::vector<double>>();
    const auto pg = grads[i].get<std::vector<double>>();
    Vec x = Eigen::Map<const Vec>(px.data(), px.size());
    Vec g = Eigen::Map<const Vec>(pg.data(), pg.size());
    set.push_back(labels[i], Triplet(std::move(x), std::move(g), values[i].get<double>()));
  }
  return {params, std::move(set)};
}

TripletSetFile load_triplet_set(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return triplet_set_from_json(ss.str());
}

void save_triplet_set(const std::string& path, const TripletSet& set, const ClassParams& params) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << triplet_set_to_json(set, params) << "\n";
}

}  // namespace ncgwc
