// Wired control network between the controller and the AP agents.
//
// Messages travel as encoded protocol lines and are decoded on arrival. Each
// directed link numbers its messages 1, 2, 3, ...; replies to requests that
// carry no id of their own (SEND_CSA, ADD_LVAP, REMOVE_LVAP) echo that number
// as their ref_id.

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <utility>

#include "lvapsim/engine.hpp"
#include "lvapsim/protocol.hpp"

namespace lvapsim {

class ControlNetwork {
 public:
  using Receiver = std::function<void(NodeId from, std::int64_t link_seq, const protocol::ControlMessage&)>;

  ControlNetwork(Kernel& kernel, SimTime latency);

  void attach(NodeId node, Receiver receiver);

  /// Returns the link sequence number assigned to the message.
  std::int64_t send(NodeId from, NodeId to, const protocol::ControlMessage& msg);

  std::size_t sent_by(NodeId node) const;
  SimTime latency() const { return latency_; }

 private:
  Kernel& kernel_;
  SimTime latency_;
  std::map<NodeId, Receiver> receivers_;
  std::map<std::pair<NodeId, NodeId>, std::int64_t> link_seq_;
  std::map<NodeId, std::size_t> sent_;
};

}  // namespace lvapsim
