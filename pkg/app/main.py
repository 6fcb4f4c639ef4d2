from fastmcp import FastMCP

from app.core.config import settings
from app.tools.experiments import register_experiment_tools

# Initialize FastMCP server
mcp = FastMCP(settings.PROJECT_NAME)

# Register Tools
register_experiment_tools(mcp)

if __name__ == "__main__":
    mcp.run()
