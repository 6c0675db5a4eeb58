#pragma once

#include <memory>

namespace httplib {
class Server;
}

namespace offat {

class Node;

/// Routes of the local control API, bound to `node`.
std::unique_ptr<httplib::Server> make_control_api(Node& node);

}  // namespace offat
