from tropical_vz.cli import main

raise SystemExit(main())
