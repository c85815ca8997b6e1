#!/usr/bin/env python3
"""Stand-in runner: answers one query from the JSON table written by compile.sh."""
import json
import sys
import time

table = json.load(open(sys.argv[1]))
query = json.loads(sys.stdin.readline())
key = query["op"] + ":" + query.get("class", query.get("method", query.get("expression", "")))
if "member" in query:
    key += "." + query["member"] + ":" + query["access"]
if query["op"] == "has_constructor":
    key += ":" + query["access"] + "(" + ",".join(query["params"]) + ")"
if query["op"] == "invoke":
    key += "(" + ",".join(json.dumps(a) for a in query["args"]) + ")"
reply = table.get(key)
print("program output that is not the reply")
if reply is None:
    print(json.dumps({"missing": True}))
elif reply == "garbage":
    print("definitely not json")
elif reply == "hang":
    time.sleep(30)
elif reply == "crash":
    sys.exit(3)
else:
    print(json.dumps(reply))
