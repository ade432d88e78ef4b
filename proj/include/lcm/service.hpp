#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "lcm/session.hpp"

namespace lcm {

// JSON/PNG HTTP front end over one Session.
class Service {
 public:
  explicit Service(Session& session, std::optional<std::filesystem::path> static_dir = std::nullopt);
  ~Service();

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  // Binds without serving yet; port 0 picks a free port. Returns the port.
  int bind(const std::string& host, int port);
  // Serves until stop(); call after bind().
  void listen();
  void stop();
  bool running() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Parses a comma-separated list of mesh ids; throws InvalidArgument.
std::set<int> parse_id_list(std::string_view text);

// Resolves a class filter such as "Hair,Face" or "!Hair" against current
// labels: included classes first (all meshes when only exclusions are
// given), then exclusions removed. Throws UnknownClass.
std::set<int> filter_by_classes(const Session& session, std::string_view filter);

}  // namespace lcm
