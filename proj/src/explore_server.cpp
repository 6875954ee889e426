#include "nsgraph/explore_server.hpp"

#include <httplib.h>

#include <cmath>
#include <stdexcept>

#include "nsgraph/error.hpp"

namespace nsg {

using nlohmann::json;

Session::Session(Dataset data, KnnGraph graph, EdgeScores scores, std::size_t sweep_steps)
    : data_(std::move(data)), graph_(std::move(graph)), scores_(std::move(scores)) {
  if (data_.size() != graph_.n())
    throw Error("session: dataset has " + std::to_string(data_.size()) + " points but graph has " +
                std::to_string(graph_.n()) + " nodes");
  sweep_ = sweep_sort(graph_, scores_, sweep_steps);
  masks_.reserve(sweep_.steps.size());
  for (const auto& step : sweep_.steps)
    masks_.push_back(filter_edges(graph_, scores_, CombinedThreshold{step.threshold}));
}

std::shared_ptr<const Session> Session::load(const RunConfig& cfg) {
  const auto path = cfg.output_dir / artifact::kGraph;
  if (!std::filesystem::exists(path)) throw MissingArtifact("build", path);
  auto sg = read_scored_edges(path);
  return std::make_shared<const Session>(load_dataset(cfg), std::move(sg.graph), std::move(sg.scores),
                                         cfg.sweep_steps);
}

json Session::meta() const {
  return {{"n", graph_.n()},
          {"k", graph_.k()},
          {"d", data_.dim()},
          {"metric", graph_.metric_tag()},
          {"has_labels", data_.labels().has_value()},
          {"has_xy", data_.display_xy().has_value()},
          {"sweep_thresholds", sweep_.thresholds()}};
}

std::size_t Session::default_downsample() const noexcept {
  return std::max<std::size_t>(1, (graph_.n() + 1023) / 1024);
}

Session::Adjacency Session::adjacency(double threshold, std::size_t downsample) const {
  const std::size_t i = sweep_.snap(threshold);
  const auto& step = sweep_.steps[i];
  const Raster r = render_adjacency(step.permutation, graph_, masks_[i], downsample);
  json boxes = json::array();
  for (const Box& b : component_boxes(step.permutation, step.labeling)) {
    const std::size_t x0 = b.offset / downsample;
    const std::size_t x1 = (b.offset + b.size - 1) / downsample;
    boxes.push_back({{"id", b.component},
                     {"offset", b.offset},
                     {"size", b.size},
                     {"x", x0},
                     {"y", x0},
                     {"w", x1 - x0 + 1},
                     {"h", x1 - x0 + 1}});
  }
  json sidecar{{"threshold", step.threshold},
               {"requested_threshold", threshold},
               {"downsample", downsample},
               {"width", r.width},
               {"height", r.height},
               {"components", step.labeling.num_components()},
               {"boxes", std::move(boxes)}};
  return {std::move(sidecar), encode_pgm(r)};
}

json Session::components(double threshold, std::size_t member_cap) const {
  const std::size_t i = sweep_.snap(threshold);
  const auto& step = sweep_.steps[i];
  const auto& c = step.labeling;
  std::vector<double> purity;
  if (data_.labels()) purity = component_purity(c, *data_.labels());
  // Members listed in display order.
  std::vector<std::vector<NodeId>> members(c.num_components());
  for (NodeId v : step.permutation) {
    auto& m = members[static_cast<std::size_t>(c.component_id[v])];
    if (m.size() < member_cap) m.push_back(v);
  }
  json list = json::array();
  for (std::size_t id = 0; id < c.num_components(); ++id) {
    json item{{"id", id}, {"size", c.sizes[id]}, {"member_ids", members[id]}};
    if (!purity.empty()) item["purity"] = purity[id];
    list.push_back(std::move(item));
  }
  return {{"threshold", step.threshold}, {"requested_threshold", threshold}, {"components", std::move(list)}};
}

std::optional<json> Session::points(double threshold) const {
  if (!data_.display_xy()) return std::nullopt;
  const std::size_t i = sweep_.snap(threshold);
  const auto& xy = *data_.display_xy();
  std::vector<double> xs(data_.size()), ys(data_.size());
  for (std::size_t v = 0; v < data_.size(); ++v) {
    xs[v] = xy(static_cast<Eigen::Index>(v), 0);
    ys[v] = xy(static_cast<Eigen::Index>(v), 1);
  }
  return json{{"threshold", sweep_.steps[i].threshold},
              {"x", xs},
              {"y", ys},
              {"component", sweep_.steps[i].labeling.component_id}};
}

// ---------------------------------------------------------------------------
// HTTP

struct ExploreServer::Impl {
  httplib::Server server;
};

namespace {

void send_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
  send_json(res, json{{"error", message}}, status);
}

double threshold_param(const httplib::Request& req) {
  if (!req.has_param("threshold")) return 0.0;
  const std::string v = req.get_param_value("threshold");
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size() || !(x >= 0.0 && x <= 1.0))
    throw std::invalid_argument("threshold must be a number in [0, 1]");
  return x;
}

std::size_t count_param(const httplib::Request& req, const char* name, std::size_t fallback) {
  if (!req.has_param(name)) return fallback;
  const std::string v = req.get_param_value(name);
  if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos || v.size() > 9)
    throw std::invalid_argument(std::string(name) + " must be a positive integer");
  const auto m = static_cast<std::size_t>(std::stoul(v));
  if (m < 1) throw std::invalid_argument(std::string(name) + " must be >= 1");
  return m;
}

}  // namespace

ExploreServer::ExploreServer() : impl_(std::make_unique<Impl>()) {
  auto& srv = impl_->server;

  // Wraps a handler with the 503 / 400 plumbing.
  auto route = [this](auto handler) {
    return [this, handler](const httplib::Request& req, httplib::Response& res) {
      auto s = session();
      if (!s) {
        send_error(res, 503, "session not loaded");
        return;
      }
      try {
        handler(*s, req, res);
      } catch (const std::invalid_argument& e) {
        send_error(res, 400, e.what());
      } catch (const std::exception& e) {
        send_error(res, 500, e.what());
      }
    };
  };

  srv.Get("/meta", route([](const Session& s, const httplib::Request&, httplib::Response& res) {
            send_json(res, s.meta());
          }));

  srv.Get("/adjacency", route([](const Session& s, const httplib::Request& req, httplib::Response& res) {
            const double x = threshold_param(req);
            const std::size_t m = count_param(req, "downsample", s.default_downsample());
            const std::string part = req.has_param("part") ? req.get_param_value("part") : "both";
            if (part != "both" && part != "json" && part != "pgm")
              throw std::invalid_argument("part must be both, json or pgm");
            auto view = s.adjacency(x, m);
            if (part == "json") {
              send_json(res, view.sidecar);
              return;
            }
            if (part == "pgm") {
              res.set_content(std::string(view.pgm.begin(), view.pgm.end()), "image/x-portable-graymap");
              return;
            }
            const std::string b = kMultipartBoundary;
            std::string body;
            const std::string js = view.sidecar.dump();
            body.reserve(view.pgm.size() + js.size() + 256);
            body += "--" + b + "\r\nContent-Type: application/json\r\n\r\n" + js + "\r\n";
            body += "--" + b + "\r\nContent-Type: image/x-portable-graymap\r\n\r\n";
            body.append(view.pgm.begin(), view.pgm.end());
            body += "\r\n--" + b + "--\r\n";
            res.set_content(std::move(body), "multipart/mixed; boundary=" + b);
          }));

  srv.Get("/components", route([](const Session& s, const httplib::Request& req, httplib::Response& res) {
            const double x = threshold_param(req);
            const std::size_t cap = count_param(req, "limit", 50);
            send_json(res, s.components(x, cap));
          }));

  srv.Get("/points", route([](const Session& s, const httplib::Request& req, httplib::Response& res) {
            const double x = threshold_param(req);
            auto body = s.points(x);
            if (!body) {
              send_error(res, 404, "dataset has no 2-D display coordinates");
              return;
            }
            send_json(res, *body);
          }));
}

ExploreServer::~ExploreServer() { stop(); }

void ExploreServer::attach(std::shared_ptr<const Session> session) {
  std::lock_guard lock(mutex_);
  session_ = std::move(session);
}

std::shared_ptr<const Session> ExploreServer::session() const {
  std::lock_guard lock(mutex_);
  return session_;
}

int ExploreServer::bind(const std::string& host, int port) {
  if (port == 0) {
    const int p = impl_->server.bind_to_any_port(host);
    if (p < 0) throw Error("cannot bind " + host);
    return p;
  }
  if (!impl_->server.bind_to_port(host, port)) throw Error("cannot bind " + host + ":" + std::to_string(port));
  return port;
}

void ExploreServer::listen() { impl_->server.listen_after_bind(); }

void ExploreServer::stop() {
  if (impl_) impl_->server.stop();
}

}  // namespace nsg
