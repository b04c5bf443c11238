// SPDX-License-Identifier: Apache-2.0
#include "drise/detector.hpp"

#include <string>

#include "drise/error.hpp"

namespace drise {

void Handshake::validate() const {
  if (protocol_version != kProtocolVersion) {
    throw ProtocolError("unsupported protocol version " + std::to_string(protocol_version) + ", expected " +
                        std::to_string(kProtocolVersion));
  }
  if (class_names.empty()) throw ProtocolError("handshake declares no classes");
}

DetectorPool::DetectorPool(std::vector<std::shared_ptr<Detector>> members) : members_(std::move(members)) {
  if (members_.empty()) throw ContractError("detector pool is empty");
  for (const auto& m : members_) {
    if (!m) throw ContractError("detector pool holds a null detector");
    if (m->handshake().class_names != members_.front()->handshake().class_names) {
      throw ContractError("detector pool members disagree on the class list");
    }
  }
}

DetectorPool DetectorPool::shared(std::shared_ptr<Detector> detector, std::size_t slots) {
  if (!detector) throw ContractError("null detector");
  if (slots > 1 && !detector->thread_safe()) {
    throw ContractError("detector is not thread safe and cannot be shared across slots");
  }
  return DetectorPool(std::vector<std::shared_ptr<Detector>>(std::max<std::size_t>(slots, 1), detector));
}

const Handshake& DetectorPool::handshake() const {
  if (members_.empty()) throw ContractError("detector pool is empty");
  return members_.front()->handshake();
}

}  // namespace drise
