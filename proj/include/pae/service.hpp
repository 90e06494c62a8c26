#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <shared_mutex>
#include <string>
#include <vector>

#include "pae/config.hpp"
#include "pae/corpus.hpp"
#include "pae/errors.hpp"
#include "pae/pipeline.hpp"

namespace httplib {
class Server;
}

namespace pae {

// Ingested policies, persisted as an append-only JSON-lines log and replayed
// on construction. Single writer, many readers.
class PolicyStore {
 public:
  PolicyStore(std::filesystem::path log_path, const Pipeline& pipeline);

  // Throws DuplicatePolicy if the id exists.
  std::shared_ptr<const PolicyDocument> add(PolicyDocument policy);
  std::shared_ptr<const PolicyDocument> find(const std::string& id) const;
  std::vector<std::shared_ptr<const PolicyDocument>> list() const;
  std::size_t size() const;

 private:
  std::filesystem::path log_path_;
  mutable std::shared_mutex mu_;
  std::map<std::string, std::shared_ptr<const PolicyDocument>> policies_;
};

class DuplicatePolicy : public Error {
 public:
  using Error::Error;
};

// HTTP front end: /policies, /query, /evaluate, /health.
class Service {
 public:
  explicit Service(const Config& config);
  ~Service();

  // Binds to config.host:config.port (port 0 picks a free one) and returns the port.
  int bind();
  // Blocks until stop().
  void serve();
  void stop();
  // Blocks until the server accepts connections.
  void wait_until_ready() const;

  const Pipeline& pipeline() const { return *pipeline_; }
  PolicyStore& store() { return *store_; }

 private:
  void routes();

  Config config_;
  std::unique_ptr<Pipeline> pipeline_;
  std::unique_ptr<PolicyStore> store_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace pae
