#pragma once

// Multi-area estimation. Each area runs the batch regression on its own
// model, sends the estimates of buses it shares with a neighbor, screens the
// neighbor's estimates with a Mahalanobis gate, fuses them by one-shot WLS,
// and continues with prediction and update on the fused estimate.
//
// A step is synchronous: every area finishes its local solve before any
// message is read.

#include <map>
#include <mutex>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "dsie/detection.hpp"
#include "dsie/estimation.hpp"
#include "dsie/network.hpp"

namespace dsie {

struct SharedInputMessage {
  int from_area = 0;
  int to_area = 0;
  int k = 0;
  Vec u_shared;  // V, real stacked, in ascending global bus order
  Mat p_shared;

  // Text form: a JSON object {"from", "to", "k", "u": [...], "p": [[...], ...]}
  // with round-trip double precision.
  std::string serialize() const;
  static SharedInputMessage deserialize(const std::string& text);
};

// u_shared = T u, P_shared = T P_u T^T.
SharedInputMessage extract_shared(const JointEstimate& est, const Mat& t_ij, int from_area,
                                  int to_area);

// A received message together with the receiver's own selection T_ji, which
// maps the receiver's input vector into the message order.
struct ReceivedMessage {
  SharedInputMessage message;
  Mat selection;
};

struct FusedEstimate {
  int k = 0;
  Vec x;
  Vec u;
  Mat p;

  JointEstimate as_joint() const { return {k, x, u, p}; }
};

// WLS of [x_i; u_i; u_j; ...] = [I 0; 0 I; 0 T_ji; ...] [x_f; u_f] with
// weight blockdiag(P_i, P_uj, ...). Cross-area covariance is taken as zero.
// Throws SyncError if a message step differs from the local step.
FusedEstimate assimilate(const JointEstimate& local, const std::vector<ReceivedMessage>& msgs);

struct AssimilationResidual {
  Vec y;
  Mat s;  // S P_f S^T + R_ij
};

AssimilationResidual assimilation_residual(const JointEstimate& local,
                                           const std::vector<ReceivedMessage>& msgs,
                                           const FusedEstimate& fused);

// Pre-fusion consistency check of one message against the local estimate of
// the same buses: y = u_msg - T u_i, S = P_msg + T P_u T^T.
DetectionReport gate_message(const JointEstimate& local, const ReceivedMessage& msg,
                             double alpha);

// In-process mailbox. Thread safe. Links can be cut to emulate lost packets.
class MessageChannel {
 public:
  void post(SharedInputMessage msg);
  // Removes and returns all messages for `to_area` at step k, ordered by sender.
  std::vector<SharedInputMessage> collect(int to_area, int k);
  void cut_link(int from_area, int to_area);
  void restore_link(int from_area, int to_area);

 private:
  std::mutex mutex_;
  std::multimap<std::pair<int, int>, SharedInputMessage> inbox_;  // (to, k)
  std::set<std::pair<int, int>> cut_;
};

struct GateOutcome {
  int from_area = 0;
  DetectionReport report;
  bool accepted = false;
};

struct AreaStepOutput {
  int area = 0;
  bool active = false;  // false for areas whose local model is unobservable
  JointEstimate local;
  FusedEstimate fused;
  Prediction prediction;
  FilteredState filtered;
  RegressionResidual residual;
  DetectionReport local_report;
  std::vector<GateOutcome> gates;
  bool degraded = false;  // an expected neighbor message did not arrive
};

class DistributedEstimator {
 public:
  DistributedEstimator(PartitionResult partition, double alpha, bool parallel = true);

  // Frames are indexed by area and follow each area's local layout. Entries
  // for inactive areas are ignored.
  std::vector<AreaStepOutput> step(const std::vector<MeasurementFrame>& prev,
                                   const std::vector<MeasurementFrame>& curr);

  const PartitionResult& partition() const { return partition_; }
  bool active(int area) const { return active_.at(area); }
  MessageChannel& channel() { return channel_; }

 private:
  PartitionResult partition_;
  double alpha_;
  bool parallel_;
  std::vector<bool> active_;
  MessageChannel channel_;
};

}  // namespace dsie
