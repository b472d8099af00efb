"""Prepends the Apache-2.0 header to C++ sources that lack it."""
import pathlib
import sys

HEADER = """/*
 * Copyright 2026 The vadkit Authors. All Rights Reserved.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

"""

root = pathlib.Path(sys.argv[1] if len(sys.argv) > 1 else ".")
for d in ("include", "src", "tests", "tools", "python"):
    for p in sorted((root / d).rglob("*")):
        if p.suffix in (".cpp", ".hpp") and p.is_file():
            text = p.read_text()
            if "Licensed under the Apache License" not in text[:600]:
                p.write_text(HEADER + text)
                print(p)
