#include "lvapsim/control_network.hpp"

#include <fmt/format.h>

namespace lvapsim {

ControlNetwork::ControlNetwork(Kernel& kernel, SimTime latency) : kernel_(kernel), latency_(latency) {
  if (latency.count() < 0) throw Error(Errc::InvalidValue, "control latency must be >= 0");
}

void ControlNetwork::attach(NodeId node, Receiver receiver) {
  kernel_.node_name(node);
  receivers_.insert_or_assign(node, std::move(receiver));
}

std::int64_t ControlNetwork::send(NodeId from, NodeId to, const protocol::ControlMessage& msg) {
  if (!receivers_.contains(to)) throw Error(Errc::UnknownNode, fmt::format("node {} is not on the control network", to));
  const std::int64_t seq = ++link_seq_[{from, to}];
  ++sent_[from];
  std::string line = protocol::encode(msg);
  line.pop_back();
  kernel_.schedule_in(latency_, to, "CTRL_RX", fmt::format("from={} seq={} {}", kernel_.node_name(from), seq, line),
                      [this, from, to, seq, line] {
                        // Receivers get what the wire text decodes to, not the sender's object.
                        const auto decoded = protocol::decode(line);
                        receivers_.at(to)(from, seq, decoded);
                      });
  return seq;
}

std::size_t ControlNetwork::sent_by(NodeId node) const {
  auto it = sent_.find(node);
  return it == sent_.end() ? 0 : it->second;
}

}  // namespace lvapsim
