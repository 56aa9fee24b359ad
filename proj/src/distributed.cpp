#include "dsie/distributed.hpp"

#include <algorithm>
#include <future>
#include <limits>

#include "json.hpp"

namespace dsie {

namespace {

nlohmann::json to_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

nlohmann::json to_json(const Mat& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(to_json(Vec(m.row(r).transpose())));
  return rows;
}

Vec vec_from_json(const nlohmann::json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Vec>(values.data(), static_cast<Eigen::Index>(values.size()));
}

Mat mat_from_json(const nlohmann::json& j) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  Mat m(rows, rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const Vec row = vec_from_json(j.at(r));
    if (row.size() != rows) throw ConfigError("message covariance is not square");
    m.row(r) = row.transpose();
  }
  return m;
}

}  // namespace

std::string SharedInputMessage::serialize() const {
  nlohmann::json j;
  j["from"] = from_area;
  j["to"] = to_area;
  j["k"] = k;
  j["u"] = to_json(u_shared);
  j["p"] = to_json(p_shared);
  return j.dump();
}

SharedInputMessage SharedInputMessage::deserialize(const std::string& text) {
  try {
    const nlohmann::json j = nlohmann::json::parse(text);
    SharedInputMessage msg;
    msg.from_area = j.at("from").get<int>();
    msg.to_area = j.at("to").get<int>();
    msg.k = j.at("k").get<int>();
    msg.u_shared = vec_from_json(j.at("u"));
    msg.p_shared = j.at("p").empty() ? Mat(0, 0) : mat_from_json(j.at("p"));
    if (msg.p_shared.rows() != msg.u_shared.size())
      throw ConfigError("message covariance does not match its vector");
    return msg;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed shared-input message: ") + e.what());
  }
}

SharedInputMessage extract_shared(const JointEstimate& est, const Mat& t_ij, int from_area,
                                  int to_area) {
  if (t_ij.cols() != est.u.size())
    throw DimensionError("extract_shared: selection does not match the input dimension");
  SharedInputMessage msg;
  msg.from_area = from_area;
  msg.to_area = to_area;
  msg.k = est.k;
  msg.u_shared = t_ij * est.u;
  msg.p_shared = symmetrize(t_ij * est.p_u() * t_ij.transpose());
  return msg;
}

namespace {

struct FusionSystem {
  Mat s;
  Mat r;
  Vec z;
};

FusionSystem fusion_system(const JointEstimate& local, const std::vector<ReceivedMessage>& msgs) {
  const Eigen::Index nx = local.x.size();
  const Eigen::Index nu = local.u.size();
  Eigen::Index rows = nx + nu;
  for (const ReceivedMessage& m : msgs) {
    if (m.message.k != local.k)
      throw SyncError("message from area " + std::to_string(m.message.from_area) + " is for step " +
                      std::to_string(m.message.k) + ", local step is " + std::to_string(local.k));
    if (m.selection.cols() != nu || m.selection.rows() != m.message.u_shared.size() ||
        m.message.p_shared.rows() != m.message.u_shared.size())
      throw DimensionError("assimilate: message does not match the local selection");
    rows += m.message.u_shared.size();
  }
  FusionSystem sys;
  sys.s = Mat::Zero(rows, nx + nu);
  sys.r = Mat::Zero(rows, rows);
  sys.z.resize(rows);
  sys.s.topLeftCorner(nx + nu, nx + nu).setIdentity();
  sys.r.topLeftCorner(nx + nu, nx + nu) = local.p;
  sys.z.head(nx + nu) = local.joint();
  Eigen::Index row = nx + nu;
  for (const ReceivedMessage& m : msgs) {
    const Eigen::Index d = m.message.u_shared.size();
    sys.s.block(row, nx, d, nu) = m.selection;
    sys.r.block(row, row, d, d) = m.message.p_shared;
    sys.z.segment(row, d) = m.message.u_shared;
    row += d;
  }
  return sys;
}

}  // namespace

FusedEstimate assimilate(const JointEstimate& local, const std::vector<ReceivedMessage>& msgs) {
  if (msgs.empty()) return {local.k, local.x, local.u, local.p};
  const FusionSystem sys = fusion_system(local, msgs);
  WlsSolution sol = solve_wls(sys.s, sys.r, sys.z);
  FusedEstimate out;
  out.k = local.k;
  out.x = sol.x.head(local.x.size());
  out.u = sol.x.tail(local.u.size());
  out.p = std::move(sol.p);
  return out;
}

AssimilationResidual assimilation_residual(const JointEstimate& local,
                                           const std::vector<ReceivedMessage>& msgs,
                                           const FusedEstimate& fused) {
  const FusionSystem sys = fusion_system(local, msgs);
  Vec f(fused.x.size() + fused.u.size());
  f << fused.x, fused.u;
  AssimilationResidual out;
  out.y = sys.z - sys.s * f;
  out.s = symmetrize(sys.s * fused.p * sys.s.transpose() + sys.r);
  return out;
}

DetectionReport gate_message(const JointEstimate& local, const ReceivedMessage& msg,
                             double alpha) {
  const Mat& t = msg.selection;
  if (t.cols() != local.u.size() || t.rows() != msg.message.u_shared.size())
    throw DimensionError("gate_message: selection does not match");
  const Vec y = msg.message.u_shared - t * local.u;
  const Mat s = symmetrize(msg.message.p_shared + t * local.p_u() * t.transpose());
  return detect(mahalanobis(y, s), static_cast<int>(y.size()), alpha);
}

void MessageChannel::post(SharedInputMessage msg) {
  std::lock_guard lock(mutex_);
  if (cut_.contains({msg.from_area, msg.to_area})) return;
  const std::pair<int, int> key{msg.to_area, msg.k};
  inbox_.emplace(key, std::move(msg));
}

std::vector<SharedInputMessage> MessageChannel::collect(int to_area, int k) {
  std::lock_guard lock(mutex_);
  std::vector<SharedInputMessage> out;
  auto [first, last] = inbox_.equal_range({to_area, k});
  for (auto it = first; it != last; ++it) out.push_back(std::move(it->second));
  inbox_.erase(first, last);
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.from_area < b.from_area; });
  return out;
}

void MessageChannel::cut_link(int from_area, int to_area) {
  std::lock_guard lock(mutex_);
  cut_.insert({from_area, to_area});
}

void MessageChannel::restore_link(int from_area, int to_area) {
  std::lock_guard lock(mutex_);
  cut_.erase({from_area, to_area});
}

DistributedEstimator::DistributedEstimator(PartitionResult partition, double alpha, bool parallel)
    : partition_(std::move(partition)), alpha_(alpha), parallel_(parallel) {
  for (const LocalArea& local : partition_.locals) active_.push_back(local.observability.observable);
}

namespace {

template <typename Fn>
void for_each_area(std::size_t count, bool parallel, Fn&& fn) {
  if (!parallel) {
    for (std::size_t i = 0; i < count; ++i) fn(static_cast<int>(i));
    return;
  }
  std::vector<std::future<void>> tasks;
  for (std::size_t i = 0; i < count; ++i)
    tasks.push_back(std::async(std::launch::async, [&fn, i] { fn(static_cast<int>(i)); }));
  for (auto& t : tasks) t.get();  // barrier; rethrows area failures
}

DetectionReport residual_report(const RegressionResidual& res, double alpha) {
  if (res.dof >= 1) return detect(res.d_m, res.dof, alpha);
  DetectionReport report;
  report.d_m = res.d_m;
  report.threshold = std::numeric_limits<double>::infinity();
  return report;
}

}  // namespace

std::vector<AreaStepOutput> DistributedEstimator::step(const std::vector<MeasurementFrame>& prev,
                                                       const std::vector<MeasurementFrame>& curr) {
  const std::size_t count = partition_.locals.size();
  if (prev.size() != count || curr.size() != count)
    throw DimensionError("distributed step needs one frame per area");
  std::vector<AreaStepOutput> out(count);

  // Local batch solves.
  for_each_area(count, parallel_, [&](int i) {
    AreaStepOutput& o = out[i];
    o.area = i;
    o.active = active_[i];
    if (!o.active) return;
    if (prev[i].k + 1 != curr[i].k) throw SyncError("distributed step needs consecutive frames");
    const DiscreteModel& model = partition_.locals[i].model;
    const RegressionSystem sys = assemble_regression(model, prev[i], curr[i].z_x);
    o.local = solve_batch_wls(sys, prev[i].k);
    o.residual = regression_residual(sys, o.local);
    o.local_report = residual_report(o.residual, alpha_);
  });

  // Exchange.
  for (std::size_t i = 0; i < count; ++i) {
    if (!active_[i]) continue;
    for (int j : partition_.partition.neighbors(static_cast<int>(i))) {
      if (!active_[j]) continue;
      channel_.post(extract_shared(out[i].local, partition_.partition.selection.at({int(i), j}),
                                   static_cast<int>(i), j));
    }
  }

  // Gate, assimilate, predict, update.
  for_each_area(count, parallel_, [&](int i) {
    AreaStepOutput& o = out[i];
    if (!o.active) return;
    std::vector<SharedInputMessage> inbox = channel_.collect(i, o.local.k);
    std::set<int> heard;
    std::vector<ReceivedMessage> accepted;
    for (SharedInputMessage& msg : inbox) {
      const int from = msg.from_area;
      heard.insert(from);
      ReceivedMessage rec{std::move(msg), partition_.partition.selection.at({i, from})};
      GateOutcome gate;
      gate.from_area = rec.message.from_area;
      gate.report = gate_message(o.local, rec, alpha_);
      gate.accepted = !gate.report.bad();
      if (gate.accepted) accepted.push_back(std::move(rec));
      o.gates.push_back(gate);
    }
    for (int j : partition_.partition.neighbors(i))
      if (active_[j] && !heard.contains(j)) o.degraded = true;

    const DiscreteModel& model = partition_.locals[i].model;
    o.fused = assimilate(o.local, accepted);
    o.prediction = predict(model, o.fused.as_joint());
    o.filtered = update(model, o.prediction, curr[i].z_x);
  });
  return out;
}

}  // namespace dsie
