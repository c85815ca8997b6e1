#pragma once

#include <filesystem>
#include <map>
#include <string>

#include <json.hpp>

#include "gradehint/experiment.hpp"
#include "gradehint/report.hpp"

namespace httplib {
class Server;
}

namespace gradehint {

struct Principal {
  std::string participant;  // empty for admins
  bool admin = false;
};

/// Static bearer-token table.
struct AuthTable {
  std::map<std::string, Principal, std::less<>> tokens;
  /// Roster enrolled at startup when not already in the log.
  std::vector<std::string> roster;
  std::vector<int> pretest_scores;

  /// `{"tokens": {"<tok>": {"participant": "p001"} | {"admin": true}},
  ///   "participants": [{"id": "p001", "pretest": 3}, ...]}`
  static AuthTable from_json(const nlohmann::json& j);
  static AuthTable from_json_file(const std::filesystem::path& path);

  const Principal* find(std::string_view token) const;
};

struct ApiRequest {
  std::string method;
  /// Path below the version prefix, e.g. `/submissions/s000001/hint`.
  std::string path;
  std::string authorization;
  std::string body;
  std::map<std::string, std::string> query;
};

struct ApiResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

/// HTTP surface of a Platform. Every route lives under `/v1`.
class Service {
 public:
  Service(Platform& platform, AuthTable auth, ReportOptions report_options = {});

  /// Enrolls roster members missing from the log, with conditions drawn
  /// from `seed`.
  void enroll_missing(std::uint64_t seed);

  /// Transport-independent dispatch; used by the HTTP binding and tests.
  ApiResponse handle(const ApiRequest& req);

  /// Registers the routes on `server` under `/v1`.
  void mount(httplib::Server& server);

 private:
  ApiResponse route(const ApiRequest& req, const Principal& who);
  ApiResponse list_assignments(const Principal& who);
  ApiResponse get_assignment(const Principal& who, const std::string& id);
  ApiResponse post_submission(const Principal& who, const std::string& body);
  ApiResponse get_hint(const Principal& who, const std::string& submission_id);
  ApiResponse post_rating(const Principal& who, const std::string& hint_id, const std::string& body);
  ApiResponse post_click(const Principal& who, const std::string& submission_id, const std::string& body);
  ApiResponse post_affect(const Principal& who, const std::string& body);
  ApiResponse get_report(const Principal& who, const std::map<std::string, std::string>& query);

  Platform& platform_;
  AuthTable auth_;
  ReportOptions report_options_;
};

/// Labels of the five-point hint rating scale, lowest first.
const std::vector<std::string>& rating_labels();

}  // namespace gradehint
